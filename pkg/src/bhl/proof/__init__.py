from .checker import (
    Assumed, CheckReport, Discharged, Refuted, Rejection, Scenarios, canon, check_proof,
    discharge, parse_directive, same,
)
from .derived import DerivationError, apply_derived
from .logic import SCHEMATA, Proof, Reasoner
from .tree import (
    DERIVED, RULES, Judgment, Lemma, LemmaBase, ProofFormatError, ProofScript, ProofTree,
    SideCondition, load_proof, parse_proof,
)
