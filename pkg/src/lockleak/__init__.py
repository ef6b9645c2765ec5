"""Logic-locking key-fault simulator and leakage analysis toolkit."""

from .chacha import (
    FAULT_NONE,
    FAULT_OR_TO_AND,
    ChaChaKey,
    ChaChaState,
    FaultSpec,
    encrypt,
    init_state,
    keystream_block,
    quarter_round,
    rotl,
)
from .leakage import LeakFinding, RunOutcome, classify, recover_key, scan_leak
from .locking import (
    KeyGateRecord,
    LockKey,
    LockingPlan,
    TrojanKeyMux,
    flip_key_bit,
    insert_key_gates,
    interlock,
    trojan_select,
)
from .netlist import Gate, Netlist, equivalence_check, evaluate, parse, serialize
from .rvc import TRAP, CoreState, DecodedInstr, decode, encode, run_quarter_round, step

__version__ = "0.1.0"
