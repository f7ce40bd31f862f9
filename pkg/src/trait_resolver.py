"""
Flint trait resolver
Checks conformances and embeds default trait bodies into the conforming
structures and contracts
"""

import copy
import logging
from typing import List, Optional, Tuple

from diagnostics import Diagnostic, Note, PASS_TRAITS, error
from environment import Environment, FunctionInfo, TraitInfo, TypeInfo
from flint_ast import (
    BehaviourDecl, ContractDecl, EventDecl, FunctionDecl, Identifier, SourceModule,
    StructDecl,
)
from flint_types import VOID

logger = logging.getLogger(__name__)


def member_key(member, conformer: str) -> Tuple:
    """Signature key of a trait member once Self is replaced by the conformer"""
    if isinstance(member, FunctionDecl):
        kind, name = "func", member.name.name
    else:
        kind, name = member.kind, member.kind
    parameters = tuple((p.type_annotation.substitute_self(conformer), p.is_inout) for p in member.parameters)
    return kind, name, parameters


def member_label(member) -> str:
    name = member.name.name if isinstance(member, FunctionDecl) else member.kind
    return name + "(" + "".join(f"{p.name.name}:" for p in member.parameters) + ")"


def member_span(member):
    return member.name.span if isinstance(member, FunctionDecl) else member.span


class TraitResolver:
    def __init__(self, module: SourceModule, env: Environment):
        self.module = module
        self.env = env
        self.diagnostics: List[Diagnostic] = []

    def report(self, diagnostic: Diagnostic):
        diagnostic.pass_index = PASS_TRAITS
        self.diagnostics.append(diagnostic)

    def resolve(self) -> Tuple[SourceModule, List[Diagnostic]]:
        declarations = []
        for declaration in self.module.declarations:
            if isinstance(declaration, (StructDecl, ContractDecl)):
                info = self.env.type_info(declaration.name.name)
                if info is not None and info.decl is declaration:
                    embedded = self.conform(info, declaration)
                    declarations.append(declaration if embedded is None else embedded)
                    continue
            declarations.append(declaration)

        extra = []
        for declaration in declarations:
            if isinstance(declaration, ContractDecl):
                extra.extend(self.embedded_behaviours(declaration.name.name))
        logger.debug("trait resolution produced %d diagnostics", len(self.diagnostics))
        return SourceModule(declarations + extra), self.diagnostics

    def conform(self, info: TypeInfo, declaration) -> Optional[object]:
        """Check every conformance; returns a struct declaration with the embedded copies"""
        for conformance in declaration.conformances:
            trait = self.env.traits.get(conformance.name)
            if trait is None:
                self.report(error(
                    "E-TRAIT-003", f"Use of undeclared trait '{conformance.name}'.", conformance.span,
                ))
                continue
            wanted = "contract" if info.is_contract else "struct"
            if trait.kind not in ("", wanted):
                self.report(error(
                    "E-TRAIT-003",
                    f"'{info.name}' cannot conform to {trait.kind} trait '{trait.name}'.", conformance.span,
                    [Note(f"'{trait.name}' is declared on line {trait.decl.span.line}, column {trait.decl.span.column}.",
                          trait.decl.span)],
                ))
                continue
            for member in self.function_members(trait):
                self.check_member(info, trait, member, conformance.span)

        if info.is_contract:
            return None
        embedded = [f.decl for f in info.functions + info.initialisers if f.trait is not None]
        if not embedded:
            return None
        result = copy.copy(declaration)
        result.members = list(declaration.members) + embedded
        return result

    @staticmethod
    def function_members(trait: TraitInfo) -> list:
        members = []
        for member in trait.decl.members:
            if isinstance(member, BehaviourDecl):
                members.extend(member.members)
            elif not isinstance(member, EventDecl):
                members.append(member)
        return members

    def own_function(self, info: TypeInfo, key: Tuple) -> Optional[FunctionInfo]:
        for function in info.all_functions():
            if function.trait is None and function.signature_key == key:
                return function
        return None

    def check_member(self, info: TypeInfo, trait: TraitInfo, member, conformance_span):
        key = member_key(member, info.name)
        implementation = self.own_function(info, key)
        if member.body is None:
            if implementation is None or implementation.body is None:
                self.report(error(
                    "E-TRAIT-001",
                    f"'{info.name}' does not implement '{member_label(member)}' required by trait '{trait.name}'.",
                    conformance_span,
                    [Note(f"'{member_label(member)}' is declared on line {member_span(member).line}, "
                          f"column {member_span(member).column}.", member_span(member))],
                ))
                return
            expected = member.return_type.substitute_self(info.name) if isinstance(member, FunctionDecl) and member.return_type else VOID
            if implementation.return_type != expected:
                self.report(error(
                    "E-TRAIT-001",
                    f"'{member_label(member)}' of '{info.name}' must return '{expected.display()}' as required by trait '{trait.name}'.",
                    implementation.span,
                ))
            return
        if implementation is not None:
            self.report(error(
                "E-TRAIT-002",
                f"'{member_label(member)}' has more than one body in '{info.name}'.",
                implementation.span,
                [Note(f"Trait '{trait.name}' already defines it on line {member_span(member).line}, "
                      f"column {member_span(member).column}.", member_span(member))],
            ))

    def embedded_behaviours(self, contract: str) -> List[BehaviourDecl]:
        """Behaviour blocks copied from contract traits, plus an (any) block for direct trait functions"""
        info = self.env.contracts.get(contract)
        if info is None:
            return []
        blocks = []
        direct = []
        for behaviour in info.behaviours:
            if behaviour.decl is None or any(behaviour.decl is d for d in self.module.declarations):
                continue
            blocks.append(behaviour.decl)
        for function in info.functions:
            if function.trait is not None and function.decl is not None and (
                    function.behaviour is None or function.behaviour.decl is None):
                direct.append(function.decl)
        if direct:
            anchor = info.decl.name
            blocks.append(BehaviourDecl(Identifier(contract, anchor.span), [Identifier("any", anchor.span)], direct,
                                        span=anchor.span))
        return blocks


def resolve_traits(module: SourceModule, env: Environment) -> Tuple[SourceModule, List[Diagnostic]]:
    """Check conformances and return the module with trait bodies embedded"""
    return TraitResolver(module, env).resolve()
