"""
JSON report assembly and schema validation.

Reports are plain dicts; dump_report serializes them with sorted keys so
identical runs give byte-identical files.
"""

import json
import logging
import os
from functools import lru_cache
from typing import Any, Dict, List, Optional

import jsonschema

from ledger import ProofRun
from utils import Verdict

logger = logging.getLogger(__name__)

SCHEMA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'schemas')

SCHEMA_FILES = {
    'family': 'family.schema.json',
    'stateset': 'stateset.schema.json',
    'entanglement': 'entanglement-report.schema.json',
    'certification': 'certification-report.schema.json',
    'proof': 'proof-report.schema.json',
    'verify': 'verify-report.schema.json',
}


@lru_cache(maxsize=None)
def load_schema(kind: str) -> Dict[str, Any]:
    if kind not in SCHEMA_FILES:
        raise ValueError(f"unknown report kind {kind!r}")
    with open(os.path.join(SCHEMA_DIR, SCHEMA_FILES[kind]), 'r', encoding='utf-8') as f:
        return json.load(f)


def validate_report(kind: str, report: Any) -> None:
    """Raises jsonschema.ValidationError when the report does not match its schema."""
    jsonschema.validate(instance=report, schema=load_schema(kind))


def dump_report(report: Any) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + '\n'


def set_id(variant: str, n: int) -> str:
    return f"{variant}-N{n}"


def verify_report(
    set_name: str,
    n: int,
    variant: str,
    checks: Dict[str, Verdict],
    tolerances: Dict[str, float],
    entanglement: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    report = {
        'set_id': set_name,
        'n_parties': n,
        'variant': variant,
        'tolerances': tolerances,
        'checks': {name: v.to_dict() for name, v in checks.items()},
        'passed': all(v.passed for v in checks.values()),
    }
    if entanglement is not None:
        report['entanglement'] = entanglement
    return report


def certification_report(
    set_name: str,
    verdict: Verdict,
    tolerances: Dict[str, float],
    expected: str = 'trivial',
    ledger_trace: Optional[List[Dict[str, Any]]] = None,
) -> Dict[str, Any]:
    """
    expected is 'trivial' for sets claimed strongly nonlocal and 'nontrivial'
    for negative controls; `passed` says whether the outcome matched it.
    """
    cuts = verdict.details['cuts']
    matched = verdict.passed if expected == 'trivial' else all(not cut['trivial'] for cut in cuts)
    return {
        'set_id': set_name,
        'mode': verdict.details['mode'],
        'tolerances': tolerances,
        'cuts': cuts,
        'expected': expected,
        'all_trivial': all(cut['trivial'] for cut in cuts),
        'violation': verdict.violation,
        'passed': matched,
        'ledger_trace': ledger_trace or [],
    }


def proof_report(set_name: str, run: ProofRun, verdict: Verdict, inherited_by: Optional[str] = None) -> Dict[str, Any]:
    report = {
        'set_id': set_name,
        'n_parties': run.n_parties,
        'case': run.case_tag,
        'passed': verdict.passed,
        'violation': verdict.violation,
        'facts': verdict.details.get('facts', 0),
        'ledger_trace': run.trace,
    }
    if inherited_by:
        report['inherited_by'] = inherited_by
    return report
