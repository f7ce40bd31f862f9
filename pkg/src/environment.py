"""
Flint global environment
Registers contracts, structures, enums, traits, typestates, protections and
function signatures so that the analysis passes can resolve names
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from diagnostics import Diagnostic, Note, PASS_ENVIRONMENT, error, warning
from flint_ast import (
    BehaviourDecl, ContractDecl, EnumDecl, EventDecl, FunctionDecl, Identifier, NO_SPAN,
    SourceModule, SpecialDecl, StructDecl, TraitDecl, VariableDeclaration, substitute_self,
)
from flint_lexer import Span
from flint_types import (
    ADDRESS, BOOL, TypeKind, TypeRef, VOID, basic_type, parse_type_text,
)
from stdlib import (
    CURRENCY_TYPE, GLOBAL_FUNCTION_SCHEMAS, RUNTIME_FUNCTION_SCHEMAS, is_stdlib_file,
)

logger = logging.getLogger(__name__)


class ProtectionKind(Enum):
    ANY = "any"
    ADDRESS_PROPERTY = "address"
    ADDRESS_LIST_PROPERTY = "list"
    PREDICATE = "predicate"


@dataclass(frozen=True)
class Protection:
    kind: ProtectionKind
    name: str = "any"


ANY_PROTECTION = Protection(ProtectionKind.ANY)


@dataclass
class ParameterInfo:
    name: str
    type: TypeRef
    is_inout: bool = False
    is_implicit: bool = False
    default: Optional[object] = None
    span: Span = NO_SPAN


@dataclass
class PropertyInfo:
    name: str
    type: TypeRef
    is_constant: bool
    default: Optional[object]
    is_visible: bool
    owner: str
    span: Span = NO_SPAN


@dataclass
class EventInfo:
    name: str
    fields: List[Tuple[str, TypeRef]]
    span: Span = NO_SPAN


@dataclass
class BehaviourInfo:
    contract: str
    protection_names: List[str]
    protections: List[Protection] = field(default_factory=list)
    states: FrozenSet[str] = frozenset()
    caller_binding: Optional[str] = None
    span: Span = NO_SPAN
    decl: Optional[BehaviourDecl] = field(default=None, repr=False, compare=False)

    @property
    def admits_any(self) -> bool:
        return "any" in self.protection_names

    def describe_protections(self) -> str:
        return "(" + ", ".join(self.protection_names) + ")"

    def describe_states(self) -> str:
        return "(" + ", ".join(sorted(self.states)) + ")" if self.states else "(any)"


@dataclass
class FunctionInfo:
    name: str
    owner: str
    kind: str
    parameters: List[ParameterInfo]
    return_type: TypeRef = VOID
    is_mutating: bool = False
    is_public: bool = False
    is_payable: bool = False
    decl: Optional[Union[FunctionDecl, SpecialDecl]] = None
    behaviour: Optional[BehaviourInfo] = None
    origin: str = "user"
    trait: Optional[str] = None
    runtime_name: Optional[str] = None
    getter_property: Optional[str] = None
    terminates: bool = False
    span: Span = NO_SPAN

    @property
    def is_init(self) -> bool:
        return self.kind == "init"

    @property
    def is_fallback(self) -> bool:
        return self.kind == "fallback"

    @property
    def required_states(self) -> FrozenSet[str]:
        return self.behaviour.states if self.behaviour else frozenset()

    @property
    def protection_names(self) -> List[str]:
        return self.behaviour.protection_names if self.behaviour else ["any"]

    @property
    def parameter_types(self) -> List[TypeRef]:
        return [p.type for p in self.parameters]

    @property
    def external_parameters(self) -> List[ParameterInfo]:
        return [p for p in self.parameters if not p.is_implicit]

    @property
    def signature_key(self) -> Tuple:
        return (self.kind, self.name, tuple((p.type, p.is_inout) for p in self.parameters))

    @property
    def body(self):
        return self.decl.body if self.decl is not None else None

    def describe(self) -> str:
        labels = "".join(f"{p.name}:" for p in self.parameters)
        return f"{self.name}({labels})"


@dataclass
class ContractInfo:
    name: str
    typestates: List[str] = field(default_factory=list)
    properties: List[PropertyInfo] = field(default_factory=list)
    events: Dict[str, EventInfo] = field(default_factory=dict)
    functions: List[FunctionInfo] = field(default_factory=list)
    initialisers: List[FunctionInfo] = field(default_factory=list)
    fallbacks: List[FunctionInfo] = field(default_factory=list)
    behaviours: List[BehaviourInfo] = field(default_factory=list)
    conformances: List[str] = field(default_factory=list)
    decl: Optional[ContractDecl] = None
    is_contract: bool = True

    @property
    def span(self) -> Span:
        return self.decl.span if self.decl else NO_SPAN

    @property
    def public_initialiser(self) -> Optional[FunctionInfo]:
        for initialiser in self.initialisers:
            if initialiser.is_public:
                return initialiser
        return None

    def property_named(self, name: str) -> Optional[PropertyInfo]:
        for prop in self.properties:
            if prop.name == name:
                return prop
        return None

    def functions_named(self, name: str) -> List[FunctionInfo]:
        return [f for f in self.functions if f.name == name]

    def all_functions(self) -> List[FunctionInfo]:
        return self.initialisers + self.functions + self.fallbacks


@dataclass
class StructInfo:
    name: str
    properties: List[PropertyInfo] = field(default_factory=list)
    functions: List[FunctionInfo] = field(default_factory=list)
    initialisers: List[FunctionInfo] = field(default_factory=list)
    conformances: List[str] = field(default_factory=list)
    decl: Optional[StructDecl] = None
    origin: str = "user"
    is_contract: bool = False

    @property
    def span(self) -> Span:
        return self.decl.span if self.decl else NO_SPAN

    property_named = ContractInfo.property_named
    functions_named = ContractInfo.functions_named

    def all_functions(self) -> List[FunctionInfo]:
        return self.initialisers + self.functions


@dataclass
class TraitInfo:
    name: str
    kind: str
    decl: TraitDecl
    origin: str = "user"


@dataclass
class EnumInfo:
    name: str
    cases: List[str]
    decl: Optional[EnumDecl] = None


TypeInfo = Union[ContractInfo, StructInfo]


class Environment:
    """Name-resolution facts shared read-only by every later pass"""

    def __init__(self):
        self.contracts: Dict[str, ContractInfo] = {}
        self.structures: Dict[str, StructInfo] = {}
        self.traits: Dict[str, TraitInfo] = {}
        self.enums: Dict[str, EnumInfo] = {}
        self.globals: Dict[str, FunctionInfo] = {}
        self.runtime_functions: Dict[str, FunctionInfo] = {}
        self.declaration_spans: Dict[str, Span] = {}
        self._implicit_initialisers: Dict[str, FunctionInfo] = {}

    def type_info(self, name: str) -> Optional[TypeInfo]:
        return self.contracts.get(name) or self.structures.get(name)

    def is_struct(self, type_ref: TypeRef) -> bool:
        return type_ref.kind == TypeKind.NAMED and type_ref.name in self.structures

    def is_enum(self, type_ref: TypeRef) -> bool:
        return type_ref.kind == TypeKind.NAMED and type_ref.name in self.enums

    def is_currency(self, type_ref: TypeRef) -> bool:
        info = self.structures.get(CURRENCY_TYPE)
        return (type_ref.kind == TypeKind.NAMED and type_ref.name == CURRENCY_TYPE
                and info is not None and info.origin == "stdlib")

    def is_reference_type(self, type_ref: TypeRef) -> bool:
        """Values handled through (address, isMem) references"""
        if self.is_enum(type_ref):
            return False
        return type_ref.is_dynamic

    def functions_of(self, owner: str, name: str) -> List[FunctionInfo]:
        info = self.type_info(owner)
        return info.functions_named(name) if info else []

    def initialisers_of(self, owner: str) -> List[FunctionInfo]:
        info = self.type_info(owner)
        if info is None:
            return []
        if not info.initialisers and not info.is_contract:
            return [self.implicit_initialiser(owner)]
        return list(info.initialisers)

    def implicit_initialiser(self, struct_name: str) -> FunctionInfo:
        """Zero-argument initialiser of a structure that declares none"""
        key = f"{struct_name}$init"
        if key not in self._implicit_initialisers:
            info = self.structures[struct_name]
            self._implicit_initialisers[key] = FunctionInfo(
                name="init", owner=struct_name, kind="init", parameters=[], is_public=True,
                origin=info.origin, span=info.span,
            )
        return self._implicit_initialisers[key]

    def all_functions(self) -> List[FunctionInfo]:
        functions: List[FunctionInfo] = []
        for contract in self.contracts.values():
            functions.extend(contract.all_functions())
        for struct in self.structures.values():
            functions.extend(struct.all_functions())
        return functions

    def struct_words(self, name: str, visiting: Tuple[str, ...] = ()) -> int:
        info = self.structures.get(name)
        if info is None or name in visiting:
            return 1
        return sum(self.type_words(p.type, visiting + (name,)) for p in info.properties) or 1

    def type_words(self, type_ref: TypeRef, visiting: Tuple[str, ...] = ()) -> int:
        if type_ref.kind == TypeKind.FIXED_ARRAY:
            return type_ref.size * self.type_words(type_ref.element, visiting)
        if self.is_struct(type_ref):
            return self.struct_words(type_ref.name, visiting)
        return 1

    def is_known_type(self, type_ref: TypeRef) -> bool:
        if type_ref.kind == TypeKind.NAMED:
            return not type_ref.args and (type_ref.name in self.structures or type_ref.name in self.enums)
        return all(self.is_known_type(arg) for arg in type_ref.args)


def _schema_function(schema: dict, kind: str) -> FunctionInfo:
    parameters = [
        ParameterInfo(p["name"], parse_type_text(p["type"]), p.get("inout", False))
        for p in schema["parameters"]
    ]
    return FunctionInfo(
        name=schema["name"], owner="", kind=kind, parameters=parameters,
        return_type=parse_type_text(schema["returns"]), origin="stdlib",
        runtime_name=schema.get("runtime"), terminates=schema.get("terminates", False),
    )


def resolve_protection(env: Environment, contract: str, identifier: Identifier) -> Tuple[Optional[Protection], List[Diagnostic]]:
    """Resolve a caller protection name: property first, then predicate function"""
    if identifier.name == "any":
        return ANY_PROTECTION, []
    info = env.contracts.get(contract)
    undefined = error(
        "E-PROT-001",
        f"Caller protection '{identifier.name}' is undefined in '{contract}', or has incompatible type.",
        identifier.span, pass_index=PASS_ENVIRONMENT,
    )
    if info is None:
        return None, [undefined]

    diagnostics: List[Diagnostic] = []
    predicates = [
        f for f in info.functions_named(identifier.name)
        if f.kind == "func" and len(f.external_parameters) == 1
        and f.external_parameters[0].type == ADDRESS and f.return_type == BOOL and not f.is_mutating
    ]
    prop = info.property_named(identifier.name)
    if prop is not None:
        kind = None
        if prop.type == ADDRESS:
            kind = ProtectionKind.ADDRESS_PROPERTY
        elif prop.type.kind in (TypeKind.ARRAY, TypeKind.FIXED_ARRAY) and prop.type.element == ADDRESS:
            kind = ProtectionKind.ADDRESS_LIST_PROPERTY
        if kind is not None:
            if info.functions_named(identifier.name):
                diagnostics.append(warning(
                    "W-PROT-004",
                    f"Caller protection '{identifier.name}' names both a state property and a function; the property is used.",
                    identifier.span, pass_index=PASS_ENVIRONMENT,
                ))
            return Protection(kind, identifier.name), diagnostics
    if len(predicates) == 1:
        return Protection(ProtectionKind.PREDICATE, identifier.name), diagnostics
    return None, [undefined]


class EnvironmentBuilder:
    def __init__(self, module: SourceModule):
        self.module = module
        self.env = Environment()
        self.diagnostics: List[Diagnostic] = []

    def report(self, diagnostic: Diagnostic):
        diagnostic.pass_index = PASS_ENVIRONMENT
        self.diagnostics.append(diagnostic)

    def redeclaration(self, name: str, span: Span, previous: Span):
        self.report(error(
            "E-DECL-001", f"Invalid redeclaration of '{name}'.", span,
            [Note(f"Previous declaration on line {previous.line}, column {previous.column}.", previous)],
        ))

    def build(self) -> Tuple[Environment, List[Diagnostic]]:
        for schema in GLOBAL_FUNCTION_SCHEMAS:
            self.env.globals[schema["name"]] = _schema_function(schema, "global")
        for schema in RUNTIME_FUNCTION_SCHEMAS:
            self.env.runtime_functions[schema["name"]] = _schema_function(schema, "runtime")

        self._register_types()
        self._register_members()
        for declaration in self.module.of_type(StructDecl):
            self._register_struct_functions(declaration)
        for declaration in self.module.of_type(BehaviourDecl):
            self._register_behaviour(declaration, declaration.contract_name.name)
        self._embed_traits()
        self._resolve_protections()
        self._synthesize_getters()
        logger.debug("environment: %d contracts, %d structures, %d traits",
                     len(self.env.contracts), len(self.env.structures), len(self.env.traits))
        return self.env, self.diagnostics

    # --- top-level names -------------------------------------------------

    def _register_types(self):
        for declaration in self.module.declarations:
            if isinstance(declaration, BehaviourDecl):
                continue
            name = declaration.name.name
            if name in self.env.declaration_spans or basic_type(name) is not None:
                previous = self.env.declaration_spans.get(name, declaration.name.span)
                self.redeclaration(name, declaration.name.span, previous)
                continue
            self.env.declaration_spans[name] = declaration.name.span
            origin = "stdlib" if is_stdlib_file(declaration.span.file) else "user"
            if isinstance(declaration, ContractDecl):
                self.env.contracts[name] = ContractInfo(
                    name, [t.name for t in declaration.typestates],
                    conformances=[c.name for c in declaration.conformances], decl=declaration,
                )
            elif isinstance(declaration, StructDecl):
                self.env.structures[name] = StructInfo(
                    name, conformances=[c.name for c in declaration.conformances], decl=declaration, origin=origin,
                )
            elif isinstance(declaration, TraitDecl):
                self.env.traits[name] = TraitInfo(name, declaration.kind, declaration, origin)
            elif isinstance(declaration, EnumDecl):
                cases = []
                for case in declaration.cases:
                    if case.name.name in cases:
                        self.redeclaration(case.name.name, case.name.span, declaration.cases[cases.index(case.name.name)].name.span)
                    cases.append(case.name.name)
                self.env.enums[name] = EnumInfo(name, cases, declaration)

    def _check_type(self, type_ref: TypeRef, span: Span):
        if type_ref.kind == TypeKind.NAMED and type_ref.args:
            self.report(error("E-DECL-005", f"Generic type '{type_ref.display()}' is not supported.", span))
        elif not self.env.is_known_type(type_ref):
            self.report(error("E-DECL-005", f"Use of undeclared type '{type_ref.display()}'.", span))

    def _register_members(self):
        for declaration in self.module.declarations:
            if isinstance(declaration, ContractDecl):
                info = self.env.contracts.get(declaration.name.name)
                if info is None or info.decl is not declaration:
                    continue
                seen: Dict[str, Span] = {}
                for state in declaration.typestates:
                    if state.name in seen:
                        self.redeclaration(state.name, state.span, seen[state.name])
                    seen[state.name] = state.span
                for member in declaration.members:
                    if isinstance(member, EventDecl):
                        self._register_event(info, member, seen)
                    else:
                        self._register_property(info, member, seen, typestates=info.typestates)
            elif isinstance(declaration, StructDecl):
                info = self.env.structures.get(declaration.name.name)
                if info is None or info.decl is not declaration:
                    continue
                seen = {}
                for member in declaration.members:
                    if isinstance(member, VariableDeclaration):
                        self._register_property(info, member, seen)

    def _register_property(self, info, member: VariableDeclaration, seen: Dict[str, Span], typestates=()):
        name = member.name.name
        if name in typestates:
            self.report(error(
                "E-STATE-002", f"Typestate '{name}' collides with a state property of '{info.name}'.", member.name.span,
            ))
            return
        if name in seen:
            self.redeclaration(name, member.name.span, seen[name])
            return
        seen[name] = member.name.span
        self._check_type(member.type_annotation, member.span)
        info.properties.append(PropertyInfo(
            name, member.type_annotation, member.is_constant, member.value, member.is_visible, info.name, member.name.span,
        ))

    def _register_event(self, info: ContractInfo, event: EventDecl, seen: Dict[str, Span]):
        name = event.name.name
        if name in seen:
            self.redeclaration(name, event.name.span, seen[name])
            return
        seen[name] = event.name.span
        for f in event.fields:
            self._check_type(f.type_annotation, f.span)
        info.events[name] = EventInfo(name, [(f.name.name, f.type_annotation) for f in event.fields], event.span)

    # --- functions -------------------------------------------------------

    def _function_info(self, declaration, owner: str, behaviour: Optional[BehaviourInfo], origin: str,
                       trait: Optional[str] = None) -> FunctionInfo:
        parameters = []
        names: Dict[str, Span] = {}
        for p in declaration.parameters:
            if p.name.name in names:
                self.redeclaration(p.name.name, p.name.span, names[p.name.name])
            names[p.name.name] = p.name.span
            if p.type_annotation.kind != TypeKind.SELF:
                self._check_type(p.type_annotation, p.span)
            parameters.append(ParameterInfo(p.name.name, p.type_annotation, p.is_inout, p.is_implicit, p.default, p.span))
        if isinstance(declaration, FunctionDecl):
            return_type = declaration.return_type or VOID
            if declaration.return_type is not None and return_type.kind != TypeKind.SELF:
                self._check_type(return_type, declaration.span)
            name, kind, span = declaration.name.name, "func", declaration.name.span
        else:
            return_type = VOID
            name, kind, span = declaration.kind, declaration.kind, declaration.span
        return FunctionInfo(
            name=name, owner=owner, kind=kind, parameters=parameters, return_type=return_type,
            is_mutating=declaration.is_mutating, is_public=declaration.is_public,
            is_payable=declaration.is_payable, decl=declaration, behaviour=behaviour,
            origin=origin, trait=trait, span=span,
        )

    def _add_function(self, info, function: FunctionInfo, report: bool = True) -> bool:
        pool = info.initialisers if function.is_init else (
            info.fallbacks if function.is_fallback else info.functions)
        for existing in pool:
            if existing.signature_key == function.signature_key:
                if report:
                    self.redeclaration(function.name, function.span, existing.span)
                return False
        pool.append(function)
        return True

    def _register_struct_functions(self, declaration: StructDecl):
        info = self.env.structures.get(declaration.name.name)
        if info is None or info.decl is not declaration:
            return
        for member in declaration.members:
            if isinstance(member, (FunctionDecl, SpecialDecl)):
                if isinstance(member, SpecialDecl) and member.kind == "fallback":
                    self.report(error("E-PARSE-001", "Structures cannot declare a fallback.", member.span))
                    continue
                self._add_function(info, self._function_info(member, info.name, None, info.origin))

    def _behaviour_info(self, declaration: BehaviourDecl, contract: ContractInfo) -> BehaviourInfo:
        states = set()
        admits_all_states = not declaration.state_group
        for state in declaration.state_group:
            if state.name == "any":
                admits_all_states = True
            elif state.name in contract.typestates:
                states.add(state.name)
            else:
                self.report(error(
                    "E-STATE-001", f"Typestate '{state.name}' is undefined in '{contract.name}'.", state.span,
                ))
        return BehaviourInfo(
            contract=contract.name,
            protection_names=[p.name for p in declaration.protections],
            states=frozenset() if admits_all_states else frozenset(states),
            caller_binding=declaration.caller_binding.name if declaration.caller_binding else None,
            span=declaration.span,
        )

    def _register_behaviour(self, declaration: BehaviourDecl, contract_name: str, origin: str = "user",
                            trait: Optional[str] = None, report: bool = True):
        contract = self.env.contracts.get(contract_name)
        if contract is None:
            self.report(error(
                "E-DECL-002",
                f"Contract behaviour declaration for '{contract_name}' has no associated contract declaration.",
                declaration.contract_name.span,
            ))
            return
        behaviour = self._behaviour_info(declaration, contract)
        behaviour.decl = declaration
        contract.behaviours.append(behaviour)
        for member in declaration.members:
            function = self._function_info(member, contract_name, behaviour, origin, trait)
            self._add_function(contract, function, report)

    # --- traits ----------------------------------------------------------

    def _embed_traits(self):
        for info in list(self.env.structures.values()) + list(self.env.contracts.values()):
            for trait_name in info.conformances:
                trait = self.env.traits.get(trait_name)
                if trait is None:
                    continue
                for member in trait_members(trait):
                    if isinstance(member, BehaviourDecl):
                        if info.is_contract:
                            copy = substitute_self(member, info.name)
                            copy.contract_name = Identifier(info.name, member.contract_name.span)
                            self._register_behaviour(copy, info.name, "trait", trait_name, report=False)
                        continue
                    if isinstance(member, EventDecl):
                        if info.is_contract and member.name.name not in info.events:
                            info.events[member.name.name] = EventInfo(
                                member.name.name,
                                [(f.name.name, f.type_annotation.substitute_self(info.name)) for f in member.fields],
                                member.span,
                            )
                        continue
                    if member.body is None:
                        continue
                    copy = substitute_self(member, info.name)
                    behaviour = None
                    if info.is_contract:
                        behaviour = BehaviourInfo(info.name, ["any"], [ANY_PROTECTION], frozenset(), None, member.span)
                    function = self._function_info(copy, info.name, behaviour, "stdlib" if trait.origin == "stdlib" else "trait", trait_name)
                    self._add_function(info, function, report=False)

    # --- protections and getters ----------------------------------------

    def _resolve_protections(self):
        for contract in self.env.contracts.values():
            for behaviour in contract.behaviours:
                identifiers = behaviour.decl.protections if behaviour.decl is not None else []
                for identifier in identifiers:
                    protection, diagnostics = resolve_protection(self.env, contract.name, identifier)
                    for diagnostic in diagnostics:
                        self.report(diagnostic)
                    if protection is not None:
                        behaviour.protections.append(protection)

    def _synthesize_getters(self):
        for contract in self.env.contracts.values():
            for prop in contract.properties:
                if not prop.is_visible or not (prop.type.is_basic or self.env.is_enum(prop.type)):
                    continue
                clash = [f for f in contract.functions if f.name == prop.name and not f.external_parameters]
                if clash:
                    self.redeclaration(prop.name, clash[0].span, prop.span)
                    continue
                behaviour = BehaviourInfo(contract.name, ["any"], [ANY_PROTECTION], frozenset(), None, prop.span)
                contract.functions.append(FunctionInfo(
                    name=prop.name, owner=contract.name, kind="getter", parameters=[], return_type=prop.type,
                    is_public=True, behaviour=behaviour, getter_property=prop.name, span=prop.span,
                ))


def trait_members(trait: TraitInfo) -> list:
    return list(trait.decl.members)


def build_environment(module: SourceModule) -> Tuple[Environment, List[Diagnostic]]:
    """Register every declaration of the module"""
    return EnvironmentBuilder(module).build()
