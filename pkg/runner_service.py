import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from dw_suite_service import DavisWielandtSuite
from ensemble_service import EnsembleService, EnsembleSpec
from identities_service import IdentityService, identity_scale, lemma_2_1_residual
from matrix_io_service import MatrixIOService
from operator_core import ConfigError, ToleranceConfig, spectral_norm
from orthogonality_service import OrthogonalityService
from radii_service import RadiiService
from report_service import ReportRow, ReportService
from utils import default_replay_dir, format_elapsed_ms
from verdicts import InequalityReport, classify

logger = logging.getLogger(__name__)

PAIR_CHECKS = ('thm-2-1', 'thm-2-2', 'thm-2-3')
EQUIVALENCE_CHECKS = PAIR_CHECKS + ('thm-3-1', 'cor-3-1', 'cor-3-3', 'cor-3-4', 'cor-3-5', 'daugavet')
INEQUALITY_CHECKS = ('refine-i', 'refine-ii', 'refine-iii', 'bounds', 'z2', 'identities')
CHECKS = EQUIVALENCE_CHECKS + INEQUALITY_CHECKS


@dataclass
class RunOutcome:
    rows: List[ReportRow]
    flagged: List[int] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if self.flagged else 0


class VerificationRunner:
    """Runs one check over every member of a seeded ensemble and merges the rows by instance index."""

    def __init__(self, config: Optional[ToleranceConfig] = None, threads: int = 1,
                 io_service: Optional[MatrixIOService] = None, timings: bool = False):
        self.config = config or ToleranceConfig()
        self.threads = max(1, int(threads))
        self.timings = timings
        self.radii = RadiiService(self.config)
        self.orthogonality = OrthogonalityService(self.config, radii=self.radii)
        self.identities = IdentityService(self.config, radii=self.radii)
        self.suite = DavisWielandtSuite(self.config, radii=self.radii, orthogonality=self.orthogonality)
        self.ensembles = EnsembleService()
        self.reports = ReportService()
        self.io = io_service or MatrixIOService(default_replay_dir())
        self.handlers: Dict[str, Callable] = {
            'thm-2-1': lambda i, T, S, seed: self._battery(i, self.orthogonality.verify_theorem_2_1(T, S)),
            'thm-2-2': lambda i, T, S, seed: self._battery(i, self.orthogonality.verify_theorem_2_2(T, S)),
            'thm-2-3': lambda i, T, S, seed: self._battery(i, self.orthogonality.verify_theorem_2_3(T, S)),
            'thm-3-1': lambda i, T, S, seed: self._battery(i, self.suite.theorem_3_1_battery(T)),
            'cor-3-1': lambda i, T, S, seed: self._battery(i, self.suite.corollary_3_1_battery(T)),
            'cor-3-3': lambda i, T, S, seed: self._battery(i, self.suite.corollary_3_3_battery(T)),
            'cor-3-4': self._rank_one,
            'cor-3-5': lambda i, T, S, seed: self._battery(i, self.suite.corollary_3_5_battery(T)),
            'daugavet': lambda i, T, S, seed: self._battery(i, self.orthogonality.daugavet(T)),
            'refine-i': lambda i, T, S, seed: self._inequalities(i, [self.identities.refinement_i(T)]),
            'refine-ii': self._refinement_ii,
            'refine-iii': self._refinement_iii,
            'bounds': lambda i, T, S, seed: self._inequalities(i, self.radii.check_radius_bounds(T)),
            'z2': lambda i, T, S, seed: self._inequalities(i, self.identities.z2_consequence_check(T)),
            'identities': self._identities,
        }

    def _battery(self, instance_id: int, battery) -> List[ReportRow]:
        return self.reports.rows_from_battery(instance_id, battery)

    def _inequalities(self, instance_id: int, reports: List[InequalityReport]) -> List[ReportRow]:
        return self.reports.rows_from_inequalities(instance_id, reports)

    def _instance_rng(self, seed: int, instance_id: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=int(seed) | ((int(instance_id) + 1) << 64)))

    def _rank_one(self, i: int, T: np.ndarray, S, seed: int) -> List[ReportRow]:
        # T = x y* gives back x and y (up to scale) from its largest column and row
        col = int(np.argmax(np.linalg.norm(T, axis=0)))
        row = int(np.argmax(np.linalg.norm(T, axis=1)))
        x = T[:, col]
        y = T[row, :].conj()
        return self._battery(i, self.suite.corollary_3_4_rank_one(x, y))

    def _refinement_ii(self, i: int, T: np.ndarray, S, seed: int) -> List[ReportRow]:
        rng = self._instance_rng(seed, i)
        norm = spectral_norm(T)
        modulus = (norm if norm > 0 else 1.0) * 2.0 ** rng.uniform(-1.0, 1.0)
        xi = modulus * np.exp(2j * math.pi * rng.uniform())
        return self._inequalities(i, [self.identities.refinement_ii(T, xi)])

    def _refinement_iii(self, i: int, T: np.ndarray, S, seed: int) -> List[ReportRow]:
        if spectral_norm(T) == 0.0:
            return []
        return self._inequalities(i, [self.identities.refinement_iii(T)])

    def _identities(self, i: int, T: np.ndarray, S, seed: int) -> List[ReportRow]:
        """Vector identities on random vectors drawn for this instance, with e taken from T."""
        cfg = self.config
        n = T.shape[0]
        rng = self._instance_rng(seed, i)
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        gamma = complex(rng.standard_normal(), rng.standard_normal())
        e = T[:, 0] if np.linalg.norm(T[:, 0]) > 0 else np.eye(n, dtype=np.complex128)[0]
        e = e / np.linalg.norm(e)

        scale = identity_scale(a, b, gamma)
        relative = lemma_2_1_residual(a, b, gamma) / scale
        real_relative = self.identities.real_identity_residual(a, b, gamma.real)
        approx = self.identities.best_approximation_identity(a, b)
        approx_relative = approx.residual / max(1.0, float(np.linalg.norm(a) * np.linalg.norm(b)) ** 2)
        tol = self.identities.identity_tol
        reports = [
            InequalityReport(name='lemma_2_1_residual', lhs=relative, rhs=tol, slack=tol - relative,
                             verdict=classify(tol - relative, cfg)),
            InequalityReport(name='real_identity_residual', lhs=real_relative, rhs=tol, slack=tol - real_relative,
                             verdict=classify(tol - real_relative, cfg)),
            InequalityReport(name='best_approximation_residual', lhs=approx_relative, rhs=tol,
                             slack=tol - approx_relative, verdict=classify(tol - approx_relative, cfg)),
            self.identities.buzano_check(a, b, e),
        ]
        return self._inequalities(i, reports)

    def _run_instance(self, check: str, instance_id: int, T: np.ndarray, S: Optional[np.ndarray],
                      seed: int) -> Tuple[List[ReportRow], bool]:
        start = time.perf_counter()
        rows = self.handlers[check](instance_id, T, S, seed)
        if self.timings:
            elapsed = format_elapsed_ms(time.perf_counter() - start)
            for row in rows:
                row.wall_time_ms = elapsed
        flagged = any(self.reports.is_flagged(r, check in EQUIVALENCE_CHECKS) for r in rows)
        if flagged:
            operands = {'T': T} if S is None else {'T': T, 'S': S}
            self.io.dump_replay(check, instance_id, operands)
        logger.debug(f"{check} instance {instance_id}: {len(rows)} rows, flagged={flagged}")
        return rows, flagged

    def run(self, check: str, spec: EnsembleSpec, relation: str = 'independent') -> RunOutcome:
        """
        Run ``check`` on every ensemble member. Instances may run on a thread
        pool; results are merged by instance index, so the rows do not depend
        on the thread count.
        """
        if check not in self.handlers:
            raise ValueError(f"Unknown check '{check}', expected one of {', '.join(CHECKS)}")
        if check == 'cor-3-4' and spec.kind != 'rank_one':
            raise ConfigError(f"cor-3-4 needs the rank_one ensemble, got '{spec.kind}'")
        if check in PAIR_CHECKS:
            instances = self.ensembles.generate_pairs(spec, relation)
        else:
            instances = [(T, None) for T in self.ensembles.generate(spec)]

        def job(indexed):
            i, (T, S) = indexed
            return self._run_instance(check, i, T, S, spec.seed)

        logger.info(f"Running {check} on {len(instances)} instances with {self.threads} thread(s)")
        if self.threads == 1:
            results = [job(item) for item in enumerate(instances)]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                results = list(executor.map(job, enumerate(instances)))

        rows: List[ReportRow] = []
        flagged: List[int] = []
        for i, (instance_rows, is_flagged) in enumerate(results):
            rows.extend(instance_rows)
            if is_flagged:
                flagged.append(i)
        rows.sort(key=ReportRow.sort_key)
        summary = self.reports.summarize(rows)
        logger.info(f"{check}: {summary}; flagged instances: {flagged or 'none'}")
        return RunOutcome(rows=rows, flagged=flagged)
