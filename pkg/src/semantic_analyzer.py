"""
Flint semantic analyser
Caller protection and typestate compatibility of internal calls, mutation,
initialisation, @payable and discarded-result rules
"""

import logging
from typing import Callable, Iterator, List, Optional, Set, Tuple

from diagnostics import Diagnostic, Note, PASS_SEMANTIC, error, warning
from environment import Environment, FunctionInfo
from flint_ast import (
    AttemptExpression, BecomeStatement, BinaryExpression, EmitStatement, ForStatement, FunctionCall,
    Identifier, IfStatement, InOutExpression, MemberAccess, ReturnStatement, SelfExpression,
    SourceModule, VariableDeclaration, statement_expressions, statement_span, walk_expression,
)
from type_checker import (
    CheckContext, ExpressionTyper, LocalInfo, is_terminating_call, statement_terminates,
    local_root, storage_root, unwrap,
)
from flint_types import VOID
from stdlib import RUNTIME_PREFIX

logger = logging.getLogger(__name__)


def own_expressions(statement) -> list:
    """Expressions evaluated by the statement itself; an emitted event is not a call"""
    if isinstance(statement, EmitStatement):
        return [argument.expression for argument in statement.call.arguments]
    return statement_expressions(statement)


class BodyWalker:
    """Visits every function body with a scoped CheckContext"""

    def __init__(self, env: Environment):
        self.env = env
        self.typer = ExpressionTyper(env)
        self.diagnostics: List[Diagnostic] = []

    def report(self, diagnostic: Diagnostic):
        diagnostic.pass_index = PASS_SEMANTIC
        self.diagnostics.append(diagnostic)

    def functions(self) -> Iterator[Tuple[object, FunctionInfo]]:
        for info in list(self.env.contracts.values()) + list(self.env.structures.values()):
            for function in info.all_functions():
                if function.decl is not None and function.body is not None:
                    yield info, function

    def walk(self, statements: list, ctx: CheckContext, visit: Callable):
        ctx.push()
        for statement in statements:
            visit(statement, ctx)
            if isinstance(statement, VariableDeclaration):
                declare(statement, ctx)
            elif isinstance(statement, ForStatement):
                ctx.push()
                declare(statement.variable, ctx)
                self.walk(statement.body, ctx, visit)
                ctx.pop()
            elif isinstance(statement, IfStatement):
                self.walk(statement.body, ctx, visit)
                if statement.else_body is not None:
                    self.walk(statement.else_body, ctx, visit)
        ctx.pop()


def declare(declaration: VariableDeclaration, ctx: CheckContext):
    ctx.declare(LocalInfo(
        declaration.name.name, declaration.type_annotation, declaration.is_constant, declaration.name.span,
        has_value=declaration.value is not None,
    ))


class MutationDetector:
    def __init__(self, env: Environment, typer: ExpressionTyper):
        self.env = env
        self.typer = typer

    def is_mutating(self, statement, ctx: CheckContext) -> bool:
        if isinstance(statement, BecomeStatement):
            return True
        for expression in own_expressions(statement):
            for node in walk_expression(expression):
                if isinstance(node, BinaryExpression) and node.is_assignment and storage_root(node.lhs, ctx):
                    return True
                if isinstance(node, FunctionCall) and self.is_mutating_call(node, ctx):
                    return True
        return False

    def is_mutating_call(self, call: FunctionCall, ctx: CheckContext) -> bool:
        name = call.name.name
        if call.receiver is None and (name in self.env.globals or name.startswith(RUNTIME_PREFIX)):
            return False
        for argument in call.arguments:
            if isinstance(argument.expression, InOutExpression) and storage_root(argument.expression, ctx):
                return True
        resolution = self.typer.resolve_call(call, ctx)
        function = resolution.function
        if function is None or not function.is_mutating:
            return False
        if resolution.category == "self":
            return True
        if resolution.category == "method":
            return storage_root(call.receiver, ctx) is not None
        return False


# --- caller protections and typestates ---------------------------------------

def protections_compatible(caller: FunctionInfo, callee: FunctionInfo) -> bool:
    callee_protections = set(callee.protection_names)
    return "any" in callee_protections or set(caller.protection_names) <= callee_protections


def states_compatible(caller: FunctionInfo, callee: FunctionInfo) -> bool:
    if not callee.required_states:
        return True
    return bool(caller.required_states) and caller.required_states <= callee.required_states


class ProtectionChecker(BodyWalker):
    def run(self) -> List[Diagnostic]:
        for info, function in self.functions():
            ctx = CheckContext(self.env, info, function)
            self.walk(function.body, ctx, self.visit)
        return self.diagnostics

    def visit(self, statement, ctx: CheckContext):
        for expression in own_expressions(statement):
            exempt: Set[int] = set()
            for node in walk_expression(expression):
                if isinstance(node, AttemptExpression):
                    exempt.add(id(node.call))
                elif isinstance(node, FunctionCall) and node.receiver is None:
                    self.check_call(node, ctx, id(node) in exempt)

    def check_call(self, call: FunctionCall, ctx: CheckContext, attempted: bool):
        name = call.name.name
        if name in self.env.structures or name in self.env.globals or name.startswith(RUNTIME_PREFIX):
            return
        caller = ctx.function
        candidates = ctx.owner.functions_named(name) if ctx.owner is not None else []
        if not candidates:
            if ctx.is_contract:
                message = (f"Function '{name}' is not in scope or cannot be called using caller protection "
                           f"'{caller.behaviour.describe_protections()}'.")
            else:
                message = f"Use of undeclared function '{name}'."
            self.report(error("E-PROT-003", message, call.name.span))
            return
        callee = self.typer.resolve_call(call, ctx).function
        if callee is None or attempted or not ctx.is_contract or callee.behaviour is None:
            return
        if not protections_compatible(caller, callee):
            self.report(error(
                "E-PROT-002",
                f"Function '{name}' is not in scope or cannot be called using caller protection "
                f"'{caller.behaviour.describe_protections()}'.",
                call.name.span,
                [Note(f"Perhaps you meant this function, which requires caller protection "
                      f"'{callee.behaviour.describe_protections()}'.", callee.span)],
            ))
        if not states_compatible(caller, callee):
            self.report(error(
                "E-STATE-003",
                f"Function '{name}' cannot be called in typestate '{caller.behaviour.describe_states()}'.",
                call.name.span,
                [Note(f"Perhaps you meant this function, which requires typestate "
                      f"'{callee.behaviour.describe_states()}'.", callee.span)],
            ))


# --- mutation -----------------------------------------------------------------

class MutationChecker(BodyWalker):
    def __init__(self, env: Environment):
        super().__init__(env)
        self.detector = MutationDetector(env, self.typer)

    def run(self) -> List[Diagnostic]:
        for info, function in self.functions():
            if function.is_fallback:
                if function.is_mutating:
                    self.report(warning(
                        "W-MUT-004", "Fallback functions cannot change any state; 'mutating' has no effect.",
                        function.span,
                    ))
                continue
            if function.is_init:
                continue
            ctx = CheckContext(self.env, info, function)
            found: List[object] = []

            def visit(statement, context, found=found, function=function):
                if self.detector.is_mutating(statement, context):
                    found.append(statement)
                    if not function.is_mutating:
                        self.report(error(
                            "E-MUT-001", "Use of mutating statement in a nonmutating function.",
                            statement_span(statement),
                        ))

            self.walk(function.body, ctx, visit)
            if function.is_mutating and not found:
                self.report(warning(
                    "W-MUT-002",
                    "Function does not have to be declared mutating: none of its statements are mutating.",
                    function.span,
                ))
        return self.diagnostics


# --- initialisation -----------------------------------------------------------

def declared_note(name: str, span) -> Note:
    return Note(f"'{name}' is declared on line {span.line}, column {span.column}.", span)


class InitialisationChecker(BodyWalker):
    def run(self) -> List[Diagnostic]:
        for contract in self.env.contracts.values():
            self.check_contract_initialisers(contract)
        for struct in self.env.structures.values():
            self.check_struct_initialisers(struct)
        for info, function in self.functions():
            ctx = CheckContext(self.env, info, function)
            if function.is_init:
                self.check_definite_assignment(info, function, ctx)
            else:
                self.walk(function.body, ctx, self.visit_constants)
        return self.diagnostics

    def _unassigned_properties(self, info):
        for prop in info.properties:
            if prop.default is None:
                self.report(error(
                    "E-INIT-001",
                    f"State property '{prop.name}' needs to be assigned a value, as no initialiser was declared.",
                    prop.span,
                ))

    def check_contract_initialisers(self, contract):
        declared = [f for f in contract.initialisers if f.origin != "trait"]
        public = [f for f in declared if f.is_public]
        if not public:
            self.report(error(
                "E-INIT-003",
                f"Contract '{contract.name}' needs a public initialiser accessible using caller capability 'any'.",
                contract.decl.name.span if contract.decl else contract.span,
            ))
            if not declared:
                self._unassigned_properties(contract)
            return
        first = public[0]
        for duplicate in public[1:]:
            self.report(error(
                "E-INIT-004", "A public initialiser has already been defined.", duplicate.span,
                [Note(f"A public initialiser is defined on line {first.span.line}, column {first.span.column}.",
                      first.span)],
            ))
        if first.behaviour is not None and not first.behaviour.admits_any:
            self.report(error(
                "E-INIT-005", "Public contract initialiser should be callable using caller capability 'any'.",
                first.span,
            ))

    def check_struct_initialisers(self, struct):
        public = [f for f in struct.initialisers if f.is_public]
        for duplicate in public[1:]:
            self.report(error(
                "E-INIT-004", "A public initialiser has already been defined.", duplicate.span,
                [Note(f"A public initialiser is defined on line {public[0].span.line}, column {public[0].span.column}.",
                      public[0].span)],
            ))
        if not struct.initialisers:
            self._unassigned_properties(struct)

    def _let_reassignment(self, name: str, span, declared_span) -> Diagnostic:
        return error(
            "E-MUT-003", f"Cannot reassign to value: '{name}' is a let-constant.", span,
            [declared_note(name, declared_span)],
        )

    def visit_constants(self, statement, ctx: CheckContext):
        for expression in own_expressions(statement):
            for node in walk_expression(expression):
                if isinstance(node, BinaryExpression) and node.is_assignment:
                    self.check_constant_target(node, ctx, in_initialiser=False)

    def check_constant_target(self, node: BinaryExpression, ctx: CheckContext, in_initialiser: bool):
        target = unwrap(node.lhs)
        if isinstance(target, Identifier):
            local = ctx.lookup(target.name)
            if local is not None:
                if local.is_constant and local.has_value:
                    self.report(self._let_reassignment(target.name, node.span, local.span))
                return
        local = local_root(target, ctx)
        if local is not None:
            # members and elements of a let-constant local are frozen with it
            if local.is_constant:
                self.report(self._let_reassignment(local.name, node.span, local.span))
            return
        root = storage_root(target, ctx)
        if root is None or root == "self" or in_initialiser:
            return
        prop = ctx.property_named(root)
        if prop is not None and prop.is_constant:
            self.report(self._let_reassignment(root, node.span, prop.span))

    @staticmethod
    def direct_property(target, ctx: CheckContext) -> Optional[str]:
        target = unwrap(target)
        if isinstance(target, Identifier) and ctx.lookup(target.name) is None:
            return target.name if ctx.property_named(target.name) is not None else None
        if isinstance(target, MemberAccess) and isinstance(unwrap(target.base), SelfExpression):
            return target.member.name if ctx.property_named(target.member.name) is not None else None
        return None

    def check_definite_assignment(self, info, function: FunctionInfo, ctx: CheckContext):
        required = [p.name for p in info.properties if p.default is None]

        def check_complete(must: Set[str], span):
            missing = [name for name in required if name not in must]
            if missing:
                self.report(error(
                    "E-INIT-002", "Return from initialiser without initialising all properties.", span,
                    [Note(f"'{name}' is uninitialised.", ctx.property_named(name).span) for name in missing],
                ))

        def assign(statement, must: Set[str], may: Set[str]):
            for expression in own_expressions(statement):
                for node in walk_expression(expression):
                    if not (isinstance(node, BinaryExpression) and node.is_assignment):
                        continue
                    self.check_constant_target(node, ctx, in_initialiser=True)
                    name = self.direct_property(node.lhs, ctx)
                    if name is None or node.op != "=":
                        continue
                    prop = ctx.property_named(name)
                    if prop.is_constant and (prop.default is not None or name in may):
                        self.report(self._let_reassignment(name, node.span, prop.span))
                    must.add(name)
                    may.add(name)

        def flow(statements: list, must: Set[str], may: Set[str]):
            """Returns the (must, may) sets at fall-off, or None when every path has ended"""
            ctx.push()
            try:
                for statement in statements:
                    if isinstance(statement, ReturnStatement):
                        check_complete(must, statement.span)
                        return None
                    if is_terminating_call(statement, self.env):
                        return None
                    if isinstance(statement, IfStatement):
                        then_state = flow(statement.body, set(must), set(may))
                        else_state = flow(statement.else_body or [], set(must), set(may))
                        if then_state is None and else_state is None:
                            return None
                        if then_state is None or else_state is None:
                            must, may = then_state or else_state
                        else:
                            must = then_state[0] & else_state[0]
                            may = then_state[1] | else_state[1]
                        continue
                    if isinstance(statement, ForStatement):
                        ctx.push()
                        declare(statement.variable, ctx)
                        flow(statement.body, set(must), set(may))
                        ctx.pop()
                        continue
                    assign(statement, must, may)
                    if isinstance(statement, VariableDeclaration):
                        declare(statement, ctx)
                return must, may
            finally:
                ctx.pop()

        end = flow(function.body, set(), set())
        if end is not None:
            check_complete(end[0], function.span)


# --- @payable, results, dynamic parameters, reachability ----------------------

class PayableAndResultChecker(BodyWalker):
    def __init__(self, env: Environment):
        super().__init__(env)
        self.detector = MutationDetector(env, self.typer)

    def run(self) -> List[Diagnostic]:
        for info, function in self.functions():
            self.check_signature(info, function)
            ctx = CheckContext(self.env, info, function)
            self.walk(function.body, ctx, lambda s, c, f=function: self.visit(s, c, f))
            self.check_reachability(function.body)
        return self.diagnostics

    def check_signature(self, info, function: FunctionInfo):
        implicit = [p for p in function.parameters if p.is_implicit]
        currency = [p for p in implicit if self.env.is_currency(p.type)]
        name = function.name
        if function.is_payable:
            if not currency:
                self.report(error(
                    "E-PAY-001",
                    f"Function '{name}' is declared @payable but doesn't have an implicit parameter of a currency type.",
                    function.span,
                ))
            elif len(currency) > 1:
                self.report(error(
                    "E-PAY-002", "Ambiguous implicit payable value parameter.", currency[1].span,
                ))
        elif implicit:
            self.report(error(
                "E-PAY-003", f"Function '{name}' declares an implicit parameter but is not @payable.", implicit[0].span,
            ))
        if not (info.is_contract and function.is_public):
            return
        dynamic = [p for p in function.parameters if not p.is_implicit and p.type.is_dynamic]
        if dynamic:
            self.report(error(
                "E-DECL-003", f"Function '{name}' cannot have dynamic parameters.", function.span,
                [Note(f"'{p.name}' cannot be used as a parameter.", p.span) for p in dynamic],
            ))
        if function.return_type.is_dynamic:
            self.report(error(
                "E-DECL-006",
                f"Function '{name}' cannot return a value of dynamic type '{function.return_type.display()}'.",
                function.span,
            ))

    def visit(self, statement, ctx: CheckContext, function: FunctionInfo):
        call = unwrap(statement)
        if isinstance(call, AttemptExpression):
            call = call.call
        if isinstance(call, FunctionCall):
            callee = self.typer.resolve_call(call, ctx).function
            if callee is not None and (callee.is_init or callee.return_type != VOID):
                self.report(error(
                    "E-RES-001", f"Result of function call to '{call.name.name}' is unused.", call.name.span,
                ))
        if function.is_fallback and self.detector.is_mutating(statement, ctx):
            self.report(error(
                "E-MUT-005", "Fallback functions cannot change any state.", statement_span(statement),
            ))

    def check_reachability(self, statements: list):
        for index, statement in enumerate(statements):
            if statement_terminates(statement, self.env) and index + 1 < len(statements):
                self.report(warning(
                    "W-FLOW-001", "Code after return will never be executed.",
                    statement_span(statements[index + 1]),
                ))
                break
        for statement in statements:
            if isinstance(statement, ForStatement):
                self.check_reachability(statement.body)
            elif isinstance(statement, IfStatement):
                self.check_reachability(statement.body)
                if statement.else_body is not None:
                    self.check_reachability(statement.else_body)


def check_protections(module: SourceModule, env: Environment) -> List[Diagnostic]:
    """Static caller protection and typestate compatibility of internal calls"""
    return ProtectionChecker(env).run()


def check_mutation(module: SourceModule, env: Environment) -> List[Diagnostic]:
    return MutationChecker(env).run()


def check_initialization(module: SourceModule, env: Environment) -> List[Diagnostic]:
    return InitialisationChecker(env).run()


def check_payable_and_results(module: SourceModule, env: Environment) -> List[Diagnostic]:
    return PayableAndResultChecker(env).run()


def analyse(module: SourceModule, env: Environment) -> List[Diagnostic]:
    diagnostics: List[Diagnostic] = []
    for check in (check_protections, check_mutation, check_initialization, check_payable_and_results):
        diagnostics.extend(check(module, env))
    logger.debug("semantic analysis produced %d diagnostics", len(diagnostics))
    return diagnostics
