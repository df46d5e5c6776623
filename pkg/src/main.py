import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from jsonschema import ValidationError

from entanglement import DEFAULT_RANK_TOL, DEFAULT_UNIFORM_TOL, entanglement_report
from ledger import ProofStepError, run_proof_script
from nonlocality import (
    DEFAULT_NULL_TOL,
    DEFAULT_TRIVIAL_TOL,
    FULL_SWEEP,
    LEMMA3,
    certify_strong_nonlocality,
    ghz_basis_fixture,
    product_basis_fixture,
)
from reports import (
    certification_report,
    dump_report,
    proof_report,
    set_id,
    validate_report,
    verify_report,
)
from serialization import family_to_json, family_to_text, stateset_to_dense, stateset_to_json
from states import DEFAULT_ORTHO_TOL, StateSet, build_ogeb, build_oges, verify_orthogonal_basis
from storage import config_digest, get_report, list_runs, save_run
from tritsets import (
    DEFAULT_PERMUTATION_SAMPLES,
    DEFAULT_PERMUTATION_SEED,
    EXHAUSTIVE,
    SAMPLED,
    STANDARD,
    StringFamily,
    build_family,
    build_modified_family,
    default_permutation_mode,
    verify_partition,
    verify_permutation_invariance,
)
from utils import Verdict, get_env, setup_logging

logger = logging.getLogger(__name__)

COMMANDS = ('generate', 'verify', 'certify', 'prove', 'ghz-control', 'history')
VARIANTS = ('standard', 'modified', 'oges')
MODIFIED_VARIANTS = ('modified', 'oges')

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    """Malformed run configuration."""


@dataclass
class RunConfig:
    command: str
    n_parties: int = 3
    variant: str = 'oges'
    mode: str = LEMMA3
    perm_mode: Optional[str] = None
    samples: int = DEFAULT_PERMUTATION_SAMPLES
    seed: Optional[int] = DEFAULT_PERMUTATION_SEED
    allow_large: bool = False
    json_path: Optional[str] = None
    out_dir: str = '.'
    fmt: str = 'text'
    dense: bool = False
    timings: bool = False
    record: bool = False
    reuse: bool = False
    rank_tol: float = DEFAULT_RANK_TOL
    uniform_tol: float = DEFAULT_UNIFORM_TOL
    null_tol: float = DEFAULT_NULL_TOL
    trivial_tol: float = DEFAULT_TRIVIAL_TOL
    ortho_tol: float = DEFAULT_ORTHO_TOL

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.command in ('ghz-control', 'history'):
            return
        if self.variant in MODIFIED_VARIANTS and self.n_parties < 3:
            raise ConfigError(f"--variant {self.variant} needs --n >= 3, got {self.n_parties}")
        if self.n_parties < 1:
            raise ConfigError(f"--n must be at least 1, got {self.n_parties}")
        if self.command == 'certify' and self.n_parties < 2:
            raise ConfigError("certify needs --n >= 2")
        if self.command == 'prove' and self.variant not in MODIFIED_VARIANTS:
            raise ConfigError("prove runs on the modified families: use --variant modified or oges")
        if self.perm_mode not in (None, EXHAUSTIVE, SAMPLED):
            raise ConfigError(f"unknown permutation mode {self.perm_mode!r}")
        if self.perm_mode == SAMPLED and self.seed is None:
            raise ConfigError("--perm sampled needs --seed")
        if self.samples < 1:
            raise ConfigError("--samples must be positive")
        if self.fmt not in ('text', 'json'):
            raise ConfigError(f"unknown family format {self.fmt!r}")
        for name in ('rank_tol', 'uniform_tol', 'null_tol', 'trivial_tol', 'ortho_tol'):
            if getattr(self, name) <= 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")

    @property
    def tolerances(self) -> Dict[str, float]:
        return {
            'rank': self.rank_tol,
            'uniform': self.uniform_tol,
            'null': self.null_tol,
            'trivial': self.trivial_tol,
            'ortho': self.ortho_tol,
        }

    @property
    def set_id(self) -> str:
        return set_id(self.variant, self.n_parties)

    def digest(self) -> str:
        config = asdict(self)
        for key in ('record', 'reuse', 'fmt', 'dense'):
            config.pop(key)
        return config_digest(config)


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=3, help="Number of parties N")
    common.add_argument("--variant", choices=VARIANTS, help="Family variant (default depends on command)")
    common.add_argument("--mode", choices=[LEMMA3, FULL_SWEEP], default=LEMMA3, help="Certification cuts")
    common.add_argument("--perm", choices=[EXHAUSTIVE, SAMPLED], help="Permutation check mode")
    common.add_argument("--samples", type=int, default=DEFAULT_PERMUTATION_SAMPLES, help="Sampled permutations")
    common.add_argument("--seed", type=int, default=DEFAULT_PERMUTATION_SEED, help="Seed for sampled permutations")
    common.add_argument("--allow-large", action="store_true", help="Solve oracle cuts above dimension 81")
    common.add_argument("--json", dest="json_path", help="Report path, or '-' for standard output")
    common.add_argument("--out-dir", help="Artifact directory (default: $QUTRIT_OUTPUT_DIR or .)")
    common.add_argument("--format", dest="fmt", choices=['text', 'json'], default='text', help="Family file format")
    common.add_argument("--dense", action="store_true", help="Also export dense state vectors")
    common.add_argument("--timings", action="store_true", help="Record per-cut runtimes in reports")
    common.add_argument("--record", action="store_true", help="Archive the run in the SQLite database")
    common.add_argument("--reuse", action="store_true", help="Reuse an archived report for an identical config")
    common.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    common.add_argument("--uniform-tol", type=float, default=DEFAULT_UNIFORM_TOL)
    common.add_argument("--null-tol", type=float, default=DEFAULT_NULL_TOL)
    common.add_argument("--trivial-tol", type=float, default=DEFAULT_TRIVIAL_TOL)
    common.add_argument("--ortho-tol", type=float, default=DEFAULT_ORTHO_TOL)
    common.add_argument("--log-level", help="Logging level (default: $QUTRIT_LOG_LEVEL or INFO)")

    parser = argparse.ArgumentParser(
        description="Build qutrit genuinely entangled sets and certify their strong nonlocality"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="Write family and state-set files")
    sub.add_parser("verify", parents=[common], help="Partition, permutation, orthogonality and entanglement checks")
    sub.add_parser("certify", parents=[common], help="Numeric OPLM oracle over the cuts")
    sub.add_parser("prove", parents=[common], help="Symbolic proof scripts for every spectator party")
    sub.add_parser("ghz-control", parents=[common], help="GHZ-basis negative control")
    sub.add_parser("history", parents=[common], help="List archived runs")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    variant = args.variant
    if variant is None:
        variant = STANDARD if args.command in ('generate', 'verify') else 'oges'
    cfg = RunConfig(
        command=args.command,
        n_parties=args.n,
        variant=variant,
        mode=args.mode,
        perm_mode=args.perm,
        samples=args.samples,
        seed=args.seed,
        allow_large=args.allow_large,
        json_path=args.json_path,
        out_dir=args.out_dir or get_env('QUTRIT_OUTPUT_DIR', '.') or '.',
        fmt=args.fmt,
        dense=args.dense,
        timings=args.timings,
        record=args.record,
        reuse=args.reuse,
        rank_tol=args.rank_tol,
        uniform_tol=args.uniform_tol,
        null_tol=args.null_tol,
        trivial_tol=args.trivial_tol,
        ortho_tol=args.ortho_tol,
    )
    cfg.validate()
    return cfg


def _family_for(cfg: RunConfig) -> StringFamily:
    if cfg.variant == STANDARD:
        return build_family(cfg.n_parties)
    return build_modified_family(cfg.n_parties)


def _states_for(cfg: RunConfig, family: StringFamily) -> StateSet:
    if cfg.variant == 'oges':
        return build_oges(family)
    return build_ogeb(family)


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def _summary(title: str, lines: List[str]) -> None:
    print(f"\n{'='*50}")
    print(title)
    print(f"{'='*50}")
    for line in lines:
        print(line)


def run_generate(cfg: RunConfig) -> None:
    family = _family_for(cfg)
    ss = _states_for(cfg, family)
    stem = f"{cfg.variant}-N{cfg.n_parties}"

    family_json = family_to_json(family)
    validate_report('family', family_json)
    if cfg.fmt == 'json':
        _write(os.path.join(cfg.out_dir, f"family-{stem}.json"), dump_report(family_json))
    else:
        _write(os.path.join(cfg.out_dir, f"family-{stem}.txt"), family_to_text(family))

    states_json = stateset_to_json(ss)
    validate_report('stateset', states_json)
    _write(os.path.join(cfg.out_dir, f"states-{stem}.json"), dump_report(states_json))
    if cfg.dense:
        _write(os.path.join(cfg.out_dir, f"dense-{stem}.json"), dump_report(stateset_to_dense(ss)))

    _summary("GENERATE COMPLETE", [
        f"Family: {cfg.variant} N={cfg.n_parties} ({family.case_tag})",
        f"Set sizes: {family.sizes()}",
        f"States: {len(ss)} ({ss.provenance})",
    ])


def run_verify(cfg: RunConfig) -> Tuple[str, Dict[str, Any], bool, List[str]]:
    family = _family_for(cfg)
    n = cfg.n_parties
    checks: Dict[str, Verdict] = {}

    logger.info(f"Verifying {cfg.variant} family for N={n}")
    checks['partition'] = verify_partition(family)
    perm_mode = cfg.perm_mode or default_permutation_mode(n)
    checks['permutation'] = verify_permutation_invariance(family, perm_mode, cfg.samples, cfg.seed)
    if family.variant == STANDARD:
        wrong = [size for size in family.sizes() if size != 3 ** (n - 1)]
        checks['sizes'] = Verdict(
            not wrong,
            f"set sizes {family.sizes()} differ from 3^{n - 1}" if wrong else None,
            {'sizes': family.sizes()},
        )

    ss = _states_for(cfg, family)
    logger.info(f"Checking orthogonality of {len(ss)} states")
    checks['orthogonality'] = verify_orthogonal_basis(ss, cfg.ortho_tol)

    ent = None
    if n >= 2:
        logger.info("Checking Schmidt ranks and reduced densities")
        ent = entanglement_report(ss, cfg.set_id, cfg.rank_tol, cfg.uniform_tol)
        validate_report('entanglement', ent)
        failing = [s['label'] for s in ent['states'] if not s['genuine']]
        checks['genuine_entanglement'] = Verdict(
            not failing,
            f"{len(failing)} states are not genuinely entangled, first {failing[0]}" if failing else None,
            {'genuine': ent['genuine_count'], 'states': len(ss)},
        )
        # one-uniformity and rank 3 on single-party cuts are claimed for the standard basis only
        if family.variant == STANDARD:
            not_uniform = [s['label'] for s in ent['states'] if not s['one_uniform']]
            checks['one_uniform'] = Verdict(
                not not_uniform,
                f"{len(not_uniform)} states are not one-uniform" if not_uniform else None,
                {'one_uniform': ent['one_uniform_count']},
            )
            low = [
                s['label'] for s in ent['states'] for c in s['cuts']
                if len(c['side_a']) in (1, n - 1) and c['rank'] != 3
            ]
            checks['single_party_rank'] = Verdict(
                not low,
                f"{len(low)} single-party cuts have rank other than 3" if low else None,
            )

    report = verify_report(cfg.set_id, n, cfg.variant, checks, cfg.tolerances, ent)
    lines = [f"{name}: {'PASS' if v.passed else 'FAIL'}" + (f" ({v.violation})" if v.violation else '')
             for name, v in checks.items()]
    return 'verify', report, report['passed'], lines


def run_certify(cfg: RunConfig):
    family = _family_for(cfg)
    ss = _states_for(cfg, family)
    ledgers = {}
    trace: List[Dict[str, Any]] = []
    if cfg.variant in MODIFIED_VARIANTS and cfg.mode == LEMMA3:
        run, proof_verdict = run_proof_script(cfg.n_parties, family=family)
        if proof_verdict.passed:
            ledgers = {ledger.spectator: ledger for ledger in run.ledgers}
            trace = run.trace
        else:
            logger.warning(f"Symbolic run did not conclude: {proof_verdict.violation}")
    verdict = certify_strong_nonlocality(
        ss, cfg.mode, cfg.null_tol, cfg.trivial_tol, cfg.allow_large, cfg.timings, ledgers
    )
    report = certification_report(cfg.set_id, verdict, cfg.tolerances, ledger_trace=trace)
    lines = [f"Measuring side {c['measuring_side']}: dimension {c['dimension']}, "
             f"{'trivial' if c['trivial'] else 'NONTRIVIAL'}" for c in report['cuts']]
    return 'certification', report, report['passed'], lines


def run_prove(cfg: RunConfig):
    family = build_modified_family(cfg.n_parties)
    oges = build_oges(family)
    inherited_by = None
    if cfg.variant == 'modified':
        # the OGEB contains the OGES, so every OGES constraint also binds it
        ogeb = build_ogeb(family)
        missing = [st.label for st in oges.states if not ogeb.contains(st)]
        if missing:
            raise ProofStepError('superset', f"OGEB lacks OGES state {list(missing[0])}")
        inherited_by = ogeb.provenance
    run, verdict = run_proof_script(cfg.n_parties, state_set=oges, family=family)
    report = proof_report(cfg.set_id, run, verdict, inherited_by)
    lines = [
        f"Case: {run.case_tag}",
        f"Spectator parties: {cfg.n_parties}",
        f"Trace lines: {len(run.trace)}",
        f"Facts: {report['facts']}",
        f"Pi proportional to identity on every cut: {'yes' if verdict.passed else 'NO'}",
    ]
    return 'proof', report, report['passed'], lines


def run_ghz_control(cfg: RunConfig):
    ghz = certify_strong_nonlocality(
        ghz_basis_fixture(), LEMMA3, cfg.null_tol, cfg.trivial_tol, timings=cfg.timings
    )
    report = certification_report('ghz-3qubit', ghz, cfg.tolerances, expected='nontrivial')
    product = certify_strong_nonlocality(
        product_basis_fixture(), LEMMA3, cfg.null_tol, cfg.trivial_tol, timings=cfg.timings
    )
    product_ok = all(not c['trivial'] for c in product.details['cuts'])
    if not report['passed'] or not product_ok:
        logger.warning("A negative control was certified as locally irreducible")
    lines = [f"GHZ side {c['measuring_side']}: dimension {c['dimension']}" for c in report['cuts']]
    lines += [f"Product side {c['measuring_side']}: dimension {c['dimension']}" for c in product.details['cuts']]
    return 'certification', report, report['passed'] and product_ok, lines


def run_history(cfg: RunConfig) -> int:
    runs = list_runs()
    _summary("ARCHIVED RUNS", [
        f"{r['recorded_at']}  {r['command']:<12} N={r['n_parties']} {r['variant']:<9} "
        f"{'PASS' if r['passed'] else 'FAIL'}  {r['digest'][:12]}"
        for r in runs
    ] or ["No runs recorded."])
    return EXIT_OK


HANDLERS = {
    'verify': run_verify,
    'certify': run_certify,
    'prove': run_prove,
    'ghz-control': run_ghz_control,
}


def run(cfg: RunConfig) -> int:
    """Execute one configured command; returns the process exit code."""
    if cfg.command == 'history':
        return run_history(cfg)
    if cfg.command == 'generate':
        run_generate(cfg)
        return EXIT_OK

    digest = cfg.digest()
    archived = get_report(digest) if cfg.reuse else None
    if archived is not None:
        logger.info(f"Reusing archived report {digest[:12]}")
        kind = {'verify': 'verify', 'prove': 'proof'}.get(cfg.command, 'certification')
        report, passed, lines = archived, archived['passed'], ["(archived report)"]
    else:
        logger.info(f"Running {cfg.command} for {cfg.set_id}")
        kind, report, passed, lines = HANDLERS[cfg.command](cfg)
    validate_report(kind, report)

    text = dump_report(report)
    name = 'ghz-3qubit' if cfg.command == 'ghz-control' else cfg.set_id
    if cfg.json_path == '-':
        sys.stdout.write(text)
    else:
        _write(cfg.json_path or os.path.join(cfg.out_dir, f"{cfg.command}-{name}.json"), text)
        _summary(f"{cfg.command.upper()} {'PASSED' if passed else 'FAILED'}", [f"Set: {name}"] + lines)

    if cfg.record and archived is None:
        save_run({
            'digest': digest,
            'command': cfg.command,
            'n_parties': cfg.n_parties,
            'variant': cfg.variant,
            'passed': passed,
            'report': report,
            'recorded_at': datetime.utcnow().isoformat(),
        })
        logger.info(f"Recorded run {digest[:12]}")
    return EXIT_OK if passed else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    setup_logging(args.log_level)

    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ProofStepError as e:
        logger.error(f"Proof step failed: {e}")
        return EXIT_FAILED
    except ValidationError as e:
        logger.error(f"Report does not match its schema: {e.message}")
        return EXIT_FAILED
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
