from .compiler import Bytecode, CompileError, StmtBindings, compile_count, compile_program
from .coverage import MAP_SIZE, CoverageMap, bucket, edge_index, has_new_coverage
from .vm import (
    CRASH, DEFAULT_MAX_STEPS, NORMAL, ExecBudget, ExecResult, NotAFailingTest, execute,
    exploit_trace,
)

compile = compile_program


def record_edge(cov: CoverageMap, prev: int, cur: int) -> CoverageMap:
    return cov.record_edge(prev, cur)


__all__ = [
    "CRASH", "DEFAULT_MAX_STEPS", "MAP_SIZE", "NORMAL", "Bytecode", "CompileError",
    "CoverageMap", "ExecBudget", "ExecResult", "NotAFailingTest", "StmtBindings", "bucket",
    "compile", "compile_count", "compile_program", "edge_index", "execute", "exploit_trace",
    "has_new_coverage", "record_edge",
]
