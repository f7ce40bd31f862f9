"""
Simulated chain
Accounts, deployed contract instances and all-or-nothing transactions over
lowered Flint programs
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from abi import SELECTOR_SIZE, abi_decode, abi_encode, value_to_word
from errors import Revert, RevertReason
from flint_types import TypeKind, TypeRef
from ir import IRContract, IRFunction, IRProgram
from stdlib import CURRENCY_TYPE
from vm import EmittedEvent, GasSchedule, Interpreter, format_address, offset_address, present_word

logger = logging.getLogger(__name__)

CONTRACT_ADDRESS_BASE = 0xC0DE << 144

ABI_KIND_NAMES = {
    TypeKind.INT: "uint256",
    TypeKind.ADDRESS: "address",
    TypeKind.BOOL: "bool",
    TypeKind.STRING: "string",
}


class CallStatus:
    OK = "ok"
    REVERTED = "reverted"


@dataclass
class ContractInstance:
    address: int
    code: IRContract
    storage: Dict[int, int] = field(default_factory=dict)
    typestate: int = 0
    balance: int = 0


@dataclass
class Transaction:
    caller: int
    target: int
    data: bytes = b""
    value: int = 0
    gas_limit: Optional[int] = None


@dataclass
class CallResult:
    status: str
    reason: Optional[str] = None
    detail: Optional[str] = None
    return_value: Optional[object] = None
    gas_used: int = 0
    protection_checks: int = 0
    typestate_checks: int = 0
    events: List[EmittedEvent] = field(default_factory=list)
    address: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.status == CallStatus.OK

    def to_dict(self) -> dict:
        result = {
            "status": self.status,
            "gas_used": self.gas_used,
            "protection_checks": self.protection_checks,
            "typestate_checks": self.typestate_checks,
            "events": [e.to_dict() for e in self.events],
        }
        if self.reason:
            result["reason"] = self.reason
        if self.detail:
            result["detail"] = self.detail
        if self.return_value is not None:
            result["returns"] = self.return_value
        if self.address is not None:
            result["address"] = format_address(self.address)
        return result


@dataclass
class _Snapshot:
    accounts: Dict[int, int]
    instances: Dict[int, tuple]
    event_count: int
    minted_total: int
    funded_total: int
    deployed: int


def parse_address(value) -> int:
    if isinstance(value, int):
        return value
    text = str(value)
    if not text.startswith("0x"):
        raise ValueError(f"Address '{text}' must be 0x-prefixed hex")
    return int(text, 16)


def argument_word(abi_type: str, value) -> int:
    """Word for a script or API argument; integers may be decimal strings"""
    if abi_type == "bool" and isinstance(value, str):
        if value.lower() not in ("true", "false", "1", "0"):
            raise ValueError(f"'{value}' is not a Bool")
        return 1 if value.lower() in ("true", "1") else 0
    if abi_type == "address":
        return parse_address(value)
    return value_to_word(abi_type, value)


def natural_abi_type(value) -> str:
    """ABI type an untyped script or API argument reads as"""
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "uint256"
    text = str(value).strip()
    if text.lower() in ("true", "false"):
        return "bool"
    if text.lower().startswith("0x"):
        return "address"
    return "uint256" if text.isdigit() else "string"


def argument_fits(abi_type: str, value) -> bool:
    try:
        argument_word(abi_type, value)
    except (ValueError, TypeError):
        return False
    return abi_type != "uint256" or not isinstance(value, bool)


def select_overload(entries: list, args: Sequence) -> list:
    """
    Public overloads of one arity narrowed by the arguments.

    An exact match on every argument's natural type wins; otherwise the
    entries every argument converts to. More than one survivor is ambiguous.
    An empty narrowing keeps the first entry so that conversion reports the error.
    """
    if len(entries) < 2:
        return entries
    natural = [natural_abi_type(a) for a in args]
    exact = [e for e in entries if list(e.param_types) == natural]
    if len(exact) == 1:
        return exact
    fitting = [e for e in entries if all(argument_fits(t, a) for t, a in zip(e.param_types, args))]
    return fitting or entries[:1]


def type_abi_name(type_ref: TypeRef) -> str:
    # enumerations travel as their ordinal
    return ABI_KIND_NAMES.get(type_ref.kind, "uint256")


class ChainState:
    """One deterministic chain; transactions run strictly one after another"""

    def __init__(self, schedule: Optional[GasSchedule] = None, gas_limit: Optional[int] = None):
        self.schedule = schedule or GasSchedule()
        self.gas_limit = gas_limit
        self.accounts: Dict[int, int] = {}
        self.contracts: Dict[int, ContractInstance] = {}
        self.event_log: List[EmittedEvent] = []
        self.minted_total = 0
        self.funded_total = 0
        self.deployed = 0

    # --- balances --------------------------------------------------------------------

    def balance_of(self, address: int) -> int:
        if address in self.contracts:
            return self.contracts[address].balance
        return self.accounts.get(address, 0)

    def fund(self, address: int, amount: int):
        """Credit an external account from outside the chain"""
        self.credit(address, amount)
        self.funded_total += amount

    def credit(self, address: int, amount: int):
        if address in self.contracts:
            self.contracts[address].balance += amount
        else:
            self.accounts[address] = self.accounts.get(address, 0) + amount

    def debit_account(self, address: int, amount: int):
        held = self.accounts.get(address, 0)
        if held < amount:
            raise Revert(RevertReason.INSUFFICIENT_FUNDS, f"{format_address(address)} holds {held}, needs {amount}")
        self.accounts[address] = held - amount

    def send_wei(self, instance: ContractInstance, destination: int, amount: int):
        """Plain balance credit; no code runs at the destination"""
        if instance.balance < amount:
            raise Revert(RevertReason.INSUFFICIENT_FUNDS,
                         f"contract {format_address(instance.address)} holds {instance.balance}, sends {amount}")
        instance.balance -= amount
        self.credit(destination, amount)

    def mint(self, instance: ContractInstance, amount: int):
        instance.balance += amount
        self.minted_total += amount

    def total_balance(self) -> int:
        return sum(self.accounts.values()) + sum(c.balance for c in self.contracts.values())

    def conserved_total(self) -> int:
        """Constant across every transaction"""
        return self.total_balance() - self.minted_total - self.funded_total

    # --- snapshots -------------------------------------------------------------------

    def snapshot(self) -> _Snapshot:
        return _Snapshot(
            accounts=dict(self.accounts),
            instances={a: (dict(c.storage), c.typestate, c.balance) for a, c in self.contracts.items()},
            event_count=len(self.event_log),
            minted_total=self.minted_total,
            funded_total=self.funded_total,
            deployed=self.deployed,
        )

    def restore(self, snapshot: _Snapshot):
        self.accounts = dict(snapshot.accounts)
        for address in list(self.contracts):
            if address not in snapshot.instances:
                del self.contracts[address]
        for address, (storage, typestate, balance) in snapshot.instances.items():
            instance = self.contracts[address]
            instance.storage = dict(storage)
            instance.typestate = typestate
            instance.balance = balance
        del self.event_log[snapshot.event_count:]
        self.minted_total = snapshot.minted_total
        self.funded_total = snapshot.funded_total
        self.deployed = snapshot.deployed

    # --- transactions ----------------------------------------------------------------

    def next_address(self) -> int:
        self.deployed += 1
        return CONTRACT_ADDRESS_BASE + self.deployed

    def deploy(self, program: IRProgram, contract_name: str, caller: int, args: Sequence = (),
               value: int = 0, gas_limit: Optional[int] = None) -> CallResult:
        """Create an instance and run its public initialiser exactly once"""
        code = program.contract(contract_name)
        snapshot = self.snapshot()
        address = self.next_address()
        instance = ContractInstance(address, code)
        self.contracts[address] = instance
        interpreter = Interpreter(self, instance, caller, self.schedule, self._limit(gas_limit))
        try:
            self._attach_value(instance, caller, value)
            initialiser = code.function(code.initialiser)
            abi_types = self._abi_params(initialiser)
            if len(abi_types) != len(args):
                raise Revert(RevertReason.UNKNOWN_SELECTOR,
                             f"initialiser of {contract_name} takes {len(abi_types)} arguments, got {len(args)}")
            words = [argument_word(abi, arg) for abi, arg in zip(abi_types, args)]
            interpreter.invoke(initialiser, self._bind(interpreter, initialiser, words, value), depth=0)
            if instance.typestate == 0:
                instance.typestate = code.completed_state
            interpreter.finish()
        except Revert as exc:
            self.restore(snapshot)
            logger.info("deployment of %s reverted: %s", contract_name, exc)
            return self._result(interpreter, exc)
        self.event_log.extend(interpreter.events)
        logger.debug("deployed %s at %s", contract_name, format_address(address))
        result = self._result(interpreter)
        result.address = address
        return result

    def call(self, address: int, function_name: str, args: Sequence = (), caller: int = 0,
             value: int = 0, gas_limit: Optional[int] = None) -> CallResult:
        """Encode a call by function name and dispatch it by selector"""
        instance = self.contracts.get(address)
        if instance is None:
            return CallResult(CallStatus.REVERTED, RevertReason.UNKNOWN_SELECTOR.value,
                              f"no contract at {format_address(address)}")
        entries = [e for e in instance.code.dispatch_by_name(function_name) if len(e.param_types) == len(args)]
        if not entries:
            return CallResult(CallStatus.REVERTED, RevertReason.UNKNOWN_SELECTOR.value,
                              f"{instance.code.name} has no public function {function_name} "
                              f"taking {len(args)} arguments")
        entries = select_overload(entries, args)
        if len(entries) > 1:
            return CallResult(CallStatus.REVERTED, RevertReason.UNKNOWN_SELECTOR.value,
                              f"{function_name}({', '.join(repr(a) for a in args)}) is ambiguous between "
                              f"{', '.join(e.signature for e in entries)}")
        entry = entries[0]
        words = [argument_word(t, a) for t, a in zip(entry.param_types, args)]
        return self.transact(Transaction(caller, address, abi_encode(entry.signature, words), value, gas_limit))

    def transact(self, tx: Transaction) -> CallResult:
        """Run raw call data; any revert restores the pre-transaction state"""
        instance = self.contracts.get(tx.target)
        if instance is None:
            return CallResult(CallStatus.REVERTED, RevertReason.UNKNOWN_SELECTOR.value,
                              f"no contract at {format_address(tx.target)}")
        code = instance.code
        snapshot = self.snapshot()
        interpreter = Interpreter(self, instance, tx.caller, self.schedule, self._limit(tx.gas_limit))
        entry = code.dispatch.get("0x" + tx.data[:SELECTOR_SIZE].hex())
        return_value = None
        try:
            self._attach_value(instance, tx.caller, tx.value)
            if entry is None:
                self._fallback(interpreter, tx)
            else:
                function = code.function(entry.function)
                words = abi_decode(tx.data, entry.signature)
                result = interpreter.run_entry(function, self._bind(interpreter, function, words, tx.value))
                if entry.returns:
                    return_value = self._present_return(function, result or 0)
            interpreter.finish()
        except Revert as exc:
            self.restore(snapshot)
            logger.debug("transaction to %s reverted: %s", format_address(tx.target), exc)
            return self._result(interpreter, exc)
        self.event_log.extend(interpreter.events)
        result = self._result(interpreter)
        result.return_value = return_value
        return result

    def _fallback(self, interpreter: Interpreter, tx: Transaction):
        code = interpreter.code
        selector = "0x" + tx.data[:SELECTOR_SIZE].hex()
        if code.fallback is None:
            raise Revert(RevertReason.UNKNOWN_SELECTOR, f"no function with selector {selector}")
        if tx.value:
            raise Revert(RevertReason.NOT_PAYABLE, "the fallback does not accept Wei")
        try:
            interpreter.run_entry(code.function(code.fallback), [])
        except Revert as exc:
            if exc.reason == RevertReason.OUT_OF_GAS:
                raise
            raise Revert(RevertReason.UNKNOWN_SELECTOR,
                         f"fallback reverted ({exc.reason.value}) for selector {selector}") from exc

    def _limit(self, gas_limit: Optional[int]) -> Optional[int]:
        return gas_limit if gas_limit is not None else self.gas_limit

    def _attach_value(self, instance: ContractInstance, caller: int, value: int):
        if value:
            self.debit_account(caller, value)
            instance.balance += value

    @staticmethod
    def _abi_params(function: IRFunction) -> List[str]:
        return [type_abi_name(t) for reg, t in function.params
                if not reg.endswith("$mem") and reg != function.payable_param]

    def _bind(self, interpreter: Interpreter, function: IRFunction, words: List[int], value: int) -> List[int]:
        """Argument words for an entry, with the attached Wei bound to the implicit parameter"""
        if value and not function.payable_param:
            raise Revert(RevertReason.NOT_PAYABLE, f"{function.name} is not @payable")
        args: List[int] = []
        remaining = iter(words)
        for reg, _ in function.params:
            if reg.endswith("$mem"):
                continue
            if reg == function.payable_param:
                args += [self._attached_wei(interpreter, value), 1]
            else:
                args.append(next(remaining))
        return args

    @staticmethod
    def _attached_wei(interpreter: Interpreter, value: int) -> int:
        layout = interpreter.code.struct_layouts[CURRENCY_TYPE]
        address = interpreter.memory.allocate(interpreter.word_count(TypeRef(TypeKind.NAMED, CURRENCY_TYPE)) * 32)
        raw_value_offset = layout[0][1]
        interpreter.memory.store(offset_address(address, raw_value_offset, True), value)
        interpreter.tracked_assets.append(address)
        return address

    @staticmethod
    def _present_return(function: IRFunction, word: int):
        if function.returns is None:
            return None
        if function.returns.kind in ABI_KIND_NAMES:
            return present_word(function.returns, word)
        return str(word)

    @staticmethod
    def _result(interpreter: Interpreter, exc: Optional[Revert] = None) -> CallResult:
        return CallResult(
            status=CallStatus.REVERTED if exc else CallStatus.OK,
            reason=exc.reason.value if exc else None,
            detail=exc.detail if exc else None,
            gas_used=interpreter.meter.used,
            protection_checks=interpreter.protection_checks,
            typestate_checks=interpreter.typestate_checks,
            events=[] if exc else list(interpreter.events),
        )

    # --- inspection ------------------------------------------------------------------

    def typestate_name(self, address: int) -> str:
        instance = self.contracts[address]
        for name, ordinal in instance.code.typestates.items():
            if ordinal == instance.typestate:
                return name
        return str(instance.typestate)

    def state_dump(self) -> dict:
        """Sorted, JSON-ready view of the whole chain"""
        return {
            "accounts": {format_address(a): str(b) for a, b in sorted(self.accounts.items())},
            "contracts": {
                format_address(a): {
                    "contract": c.code.name,
                    "typestate": c.typestate,
                    "balance": str(c.balance),
                    "storage": {hex(slot): str(word) for slot, word in sorted(c.storage.items())},
                }
                for a, c in sorted(self.contracts.items())
            },
            "events": [dict(e.to_dict(), address=format_address(e.address)) for e in self.event_log],
            "minted_total": str(self.minted_total),
            "funded_total": str(self.funded_total),
        }


def deploy(chain: ChainState, program: IRProgram, contract_name: str, caller: int,
           init_args: Sequence = (), value: int = 0) -> CallResult:
    return chain.deploy(program, contract_name, caller, init_args, value)


def call(chain: ChainState, tx: Transaction) -> CallResult:
    return chain.transact(tx)
