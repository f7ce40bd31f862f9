"""
Flint compiler pipeline
parse -> environment -> semantic analysis -> type checking -> trait
resolution -> lowering, with diagnostics collected from every pass
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import aiofiles

from diagnostics import Diagnostic, PASS_LOWERING, error, has_errors, sort_diagnostics
from environment import Environment, build_environment
from errors import SelectorCollisionError
from flint_ast import NO_SPAN, SourceModule
from flint_parser import parse_source
from ir import IRProgram
from lowering import lower
from semantic_analyzer import analyse
from stdlib import STDLIB_FILE_NAME, load_stdlib
from trait_resolver import resolve_traits
from type_checker import type_check

logger = logging.getLogger(__name__)


@dataclass
class CompilationResult:
    diagnostics: List[Diagnostic] = field(default_factory=list)
    program: Optional[IRProgram] = None
    module: Optional[SourceModule] = None
    env: Optional[Environment] = None

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)

    @property
    def errors(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def warnings(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if not d.is_error]


class FlintCompiler:
    """Compiles one or more Flint sources, concatenated in order, into IR"""

    def __init__(self, use_stdlib: bool = True):
        self.use_stdlib = use_stdlib

    async def compile_files(self, paths: Sequence[str]) -> CompilationResult:
        sources = []
        for path in paths:
            async with aiofiles.open(path, "r", encoding="utf-8") as handle:
                sources.append((path, await handle.read()))
        return self.compile_sources(sources)

    def compile_source(self, text: str, file_name: str = "<input>") -> CompilationResult:
        return self.compile_sources([(file_name, text)])

    def compile_sources(self, sources: Sequence[Tuple[str, str]]) -> CompilationResult:
        diagnostics: List[Diagnostic] = []
        declarations = []
        file_order = [name for name, _ in sources]
        if self.use_stdlib:
            stdlib_module, stdlib_diagnostics = load_stdlib()
            declarations.extend(stdlib_module.declarations)
            diagnostics.extend(stdlib_diagnostics)
            file_order.insert(0, STDLIB_FILE_NAME)
        for file_name, text in sources:
            module, parse_diagnostics = parse_source(text, file_name)
            declarations.extend(module.declarations)
            diagnostics.extend(parse_diagnostics)

        module = SourceModule(declarations)
        result = CompilationResult(module=module)
        if has_errors(diagnostics):
            # later passes would only report consequences of the syntax errors
            result.diagnostics = sort_diagnostics(diagnostics, file_order)
            return result

        env, env_diagnostics = build_environment(module)
        diagnostics.extend(env_diagnostics)
        diagnostics.extend(analyse(module, env))
        diagnostics.extend(type_check(module, env))
        resolved, trait_diagnostics = resolve_traits(module, env)
        diagnostics.extend(trait_diagnostics)
        result.module, result.env = resolved, env
        logger.debug("analysis of %d files produced %d diagnostics", len(sources), len(diagnostics))

        if not has_errors(diagnostics):
            try:
                result.program = lower(resolved, env)
            except SelectorCollisionError as exc:
                diagnostics.append(error("E-ABI-001", str(exc), self._contract_span(env, exc.contract),
                                         pass_index=PASS_LOWERING))
        result.diagnostics = sort_diagnostics(diagnostics, file_order)
        return result

    @staticmethod
    def _contract_span(env: Environment, name: str):
        info = env.contracts.get(name)
        return info.decl.name.span if info is not None and info.decl is not None else NO_SPAN
