"""
Session object that drives the Saito flat structure pipeline for one group:
invariants -> metric -> eta -> flat coordinates -> potential -> verification,
with an on-disk cache guarded by a hash manifest.
Author: Saito SDK developers
Copyright 2024

"""
import logging
import os
import tempfile
import threading
from dataclasses import dataclass, field
from time import time
from typing import Dict, List, Optional

from saito_sdk.checksum import sha256_str
from saito_sdk.errors import InconsistencyError, SaitoError, VerificationError
from saito_sdk.flatsolve import FlatFrame, frame_from_brackets, solve_flat
from saito_sdk.groups import build_basic_invariant, group_spec
from saito_sdk.potential import (
    Potential,
    VerificationReport,
    eta_factor_of,
    g_in_flat,
    hessian_from_g,
    integrate_potential,
    intersection_form_check,
    structure_constants,
    verify_euler,
    verify_eta_constant,
    verify_wdvv,
)
from saito_sdk.saito import DEFAULT_SEED, MetricTable, eta_table, metric_table
from saito_sdk.saito_message import SAITOMESSAGE, FixtureSet, FIXTURE_DIR, decodeManifest, encodeManifest, serialize
from saito_sdk.utils import MPQ, toRational

__version__ = "1.0.0"

SOLVERS = ("modular", "exact")
DEFAULT_CACHE = os.path.join(os.path.expanduser("~"), ".cache", "saito_sdk")

# exit codes
EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_INCONSISTENT = 3


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of a run (flags > environment > defaults, resolved by the CLI)."""

    group: str
    solver: str = "modular"
    threads: int = 1
    seed: int = DEFAULT_SEED
    metric_scale: MPQ = field(default_factory=lambda: toRational(2))
    cache_dir: str = DEFAULT_CACHE
    symbolic_wdvv: bool = False
    trials: int = 50

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError("Unknown solver {!r}, expected one of {}".format(self.solver, ", ".join(SOLVERS)))
        if int(self.threads) < 1:
            raise ValueError("threads must be >= 1")
        scale = toRational(self.metric_scale)
        if scale == 0:
            raise ValueError("metric scale must be nonzero")
        object.__setattr__(self, "metric_scale", scale)
        object.__setattr__(self, "threads", int(self.threads))

    def manifestFields(self, g) -> Dict[str, str]:
        # no thread count: manifests are identical across thread counts
        return {
            "group": g.name,
            "metric_scale": serialize(g.generator_ring.const(self.metric_scale)),
            "seed": str(self.seed),
            "solver": self.solver,
            "version": __version__,
            "chart": ",".join(g.chart_ring.names),
        }


class ArtifactWriter:
    """Single writer for a cache directory: every file appears atomically."""

    def __init__(self, root: str) -> None:
        self._root = root
        self._lock = threading.Lock()

    @property
    def root(self) -> str:
        return self._root

    def path(self, relpath: str) -> str:
        return os.path.join(self._root, *relpath.split("/"))

    def write(self, relpath: str, text: str) -> str:
        """
        Writes text to relpath through a temporary file and os.replace

        Returns
        --
        [str] sha256 of the content
        """
        target = self.path(relpath)
        with self._lock:
            os.makedirs(os.path.dirname(target), exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp-")
            try:
                with os.fdopen(fd, "w", encoding="utf8", newline="\n") as fh:
                    fh.write(text)
                os.replace(tmp, target)
            except BaseException:
                if os.path.exists(tmp):
                    os.remove(tmp)
                raise
        return sha256_str(text)

    def read(self, relpath: str) -> Optional[str]:
        target = self.path(relpath)
        if not os.path.exists(target):
            return None
        with open(target, encoding="utf8", newline="\n") as fh:
            return fh.read()


class SAITOSDK:
    def __init__(self, config: RunConfig, debug=False):
        """

        Params
        --
        - config [RunConfig] effective configuration
        - debug [bool] print debug messages
        """
        self._debug = debug
        if self._debug:
            d_level = logging.DEBUG
        else:
            d_level = logging.INFO
        LOG_FORMAT = "[%(levelname)s] %(asctime)s [SAITOSDK::%(funcName)s] :\t%(message)s"
        logging.basicConfig(format=LOG_FORMAT, level=d_level)
        self._logger = logging.getLogger(self.__class__.__name__)

        self._config = config
        self._group = group_spec(config.group)
        self._msg = SAITOMESSAGE(self._group, debug=self._debug)
        self._writer = ArtifactWriter(os.path.join(config.cache_dir, self._group.name))
        self._manifest_lock = threading.Lock()
        self._fields = config.manifestFields(self._group)
        self._artifacts: Dict[str, str] = {}

        self._metric: Optional[MetricTable] = None
        self._eta: Optional[MetricTable] = None
        self._frame: Optional[FlatFrame] = None
        self._gft: Optional[MetricTable] = None
        self._potential: Optional[Potential] = None
        self._reports: List[VerificationReport] = []
        self._last_error: Optional[BaseException] = None

        self.loadManifest()

    ##################################################
    #               Cache and manifest               #
    ##################################################
    def loadManifest(self):
        """
        Reads the cache manifest. Artifacts are only trusted when the recorded
        configuration equals the current one.
        """
        text = self._writer.read("manifest.txt")
        if text is None:
            self._logger.debug("No manifest in %s", self._writer.root)
            return False
        try:
            fields, artifacts = decodeManifest(text)
        except SaitoError as e:
            self._logger.warning("Ignoring unreadable manifest: %s", e)
            return False
        for key in ("group", "metric_scale", "seed", "solver", "version", "chart"):
            if fields.get(key) != self._fields[key]:
                self._logger.info("Cached artifacts were built with %s=%s; recomputing", key, fields.get(key))
                return False
        self._artifacts = artifacts
        for key, value in fields.items():
            if key not in self._fields:
                self._fields[key] = value
        return True

    def writeManifest(self):
        with self._manifest_lock:
            self._writer.write("manifest.txt", encodeManifest(self._fields, self._artifacts))

    def storeArtifact(self, relpath: str, text: str):
        digest = self._writer.write(relpath, text)
        with self._manifest_lock:
            self._artifacts[relpath] = digest

    def cachedArtifact(self, relpath: str) -> Optional[str]:
        """Cached text of relpath if the manifest lists it with a matching hash"""
        digest = self._artifacts.get(relpath)
        if digest is None:
            return None
        text = self._writer.read(relpath)
        if text is None or sha256_str(text) != digest:
            self._logger.info("Cached %s is missing or modified; recomputing", relpath)
            with self._manifest_lock:
                self._artifacts.pop(relpath, None)
            return None
        self._logger.debug("Cache hit %s", relpath)
        return text

    def _loadTable(self, kind: str, folder: str, prefix: str) -> Optional[MetricTable]:
        g = self._group
        d = g.degrees
        n = g.rank
        entries = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                text = self.cachedArtifact("{}/{}_{}_{}.poly".format(folder, prefix, d[a], d[b]))
                if text is None:
                    return None
                p = self._msg.decodeMsg(text, self._msg.ringFor(folder))
                if p is None:
                    return None
                entries[a][b] = entries[b][a] = p
        return MetricTable(g, kind, tuple(tuple(r) for r in entries), g.generator_ring)

    def _storeTable(self, table: MetricTable, folder: str, prefix: str):
        d = self._group.degrees
        for a, b, p in table.pairs():
            self.storeArtifact("{}/{}_{}_{}.poly".format(folder, prefix, d[a], d[b]), self._msg.encodeMsg(p))

    def _fail(self, e: BaseException):
        self._last_error = e
        self._logger.error("%s: %s", type(e).__name__, e)
        return False

    ##################################################
    #               Request functions                #
    ##################################################
    def requestInvariants(self, degree: Optional[int] = None):
        """
        Writes the basic invariants (all degrees, or one) in chart variables

        Returns
        --
        [bool] True: success. False: fail
        """
        g = self._group
        degrees = g.degrees if degree is None else (int(degree),)
        try:
            for m in degrees:
                rel = "invariants/p_{}.poly".format(m)
                if self.cachedArtifact(rel) is not None:
                    continue
                p = build_basic_invariant(g, m)
                self.storeArtifact(rel, self._msg.encodeMsg(p))
            self.writeManifest()
        except (SaitoError, ValueError) as e:
            return self._fail(e)
        return True

    def requestMetric(self):
        """
        Computes (or loads) the intersection form g^{ab}(p)

        Returns
        --
        [bool] True: success. False: fail
        """
        if self._metric is not None:
            return True
        cfg = self._config
        try:
            table = self._loadTable("g", "metric", "g")
            if table is None:
                t0 = time()
                self._logger.info("Computing the %s metric (solver %s, %d threads)", self._group.name, cfg.solver, cfg.threads)
                table = metric_table(self._group, cfg.metric_scale, cfg.solver, cfg.seed, cfg.threads)
                self._storeTable(table, "metric", "g")
                self.writeManifest()
                self._logger.info("Metric done in %.1f s", time() - t0)
            self._metric = table
        except SaitoError as e:
            return self._fail(e)
        return True

    def requestEta(self):
        """
        Extracts (or loads) the Saito metric eta = d g / d p_h

        Returns
        --
        [bool] True: success. False: fail
        """
        if self._eta is not None:
            return True
        if not self.requestMetric():
            return False
        try:
            table = self._loadTable("eta", "eta", "eta")
            if table is None:
                table = eta_table(self._metric)
                det = table.det()
                if not det.is_constant() or det.is_zero():
                    raise InconsistencyError("det(eta) is not a nonzero constant")
                self._storeTable(table, "eta", "eta")
                self.writeManifest()
            self._eta = table
        except SaitoError as e:
            return self._fail(e)
        return True

    def requestFlat(self):
        """
        Solves (or loads) the flat coordinates

        Returns
        --
        [bool] True: success. False: fail
        """
        if self._frame is not None:
            return True
        if not self.requestEta():
            return False
        g = self._group
        try:
            frame = self._loadFrame()
            if frame is None:
                t0 = time()
                frame = solve_flat(g, self._eta, self._config.threads)
                for a, d in enumerate(g.degrees):
                    self.storeArtifact("flat/t_{}.poly".format(d), self._msg.encodeMsg(frame.coords[a]))
                    self._fields["frame.scale.t_{}".format(d)] = serialize(g.generator_ring.const(frame.scale_factors[a]))
                self._fields["eta.antidiagonal"] = serialize(g.generator_ring.const(frame.antidiagonal))
                self.writeManifest()
                self._logger.info("Flat coordinates done in %.1f s", time() - t0)
            self._frame = frame
        except SaitoError as e:
            return self._fail(e)
        return True

    def _loadFrame(self) -> Optional[FlatFrame]:
        g = self._group
        brackets = []
        for a, d in enumerate(g.degrees):
            text = self.cachedArtifact("flat/t_{}.poly".format(d))
            if text is None:
                return None
            t = self._msg.decodeMsg(text, self._msg.ringFor("flat"))
            if t is None:
                return None
            lead = t.coefficient(tuple(1 if k == a else 0 for k in range(g.rank)))
            if lead == 0:
                return None
            brackets.append(t / lead)
        return frame_from_brackets(g, self._eta, brackets)

    def requestPotential(self):
        """
        Integrates (or loads) the Frobenius potential

        Returns
        --
        [bool] True: success. False: fail
        """
        if self._potential is not None:
            return True
        if not self.requestFlat():
            return False
        g = self._group
        try:
            self._gft = g_in_flat(g, self._frame, self._metric)
            text = self.cachedArtifact("potential/F.poly")
            F = None if text is None else self._msg.decodeMsg(text, self._msg.ringFor("potential"))
            if F is not None:
                P = Potential(g, F, g.weights, g.rank - 1, self._config.metric_scale)
            else:
                t0 = time()
                H = hessian_from_g(self._gft, self._frame.eta_const)
                P = integrate_potential(H, g.weights, g, self._config.metric_scale)
                self.storeArtifact("potential/F.poly", self._msg.encodeMsg(P.F))
                self.writeManifest()
                self._logger.info("Potential done in %.1f s", time() - t0)
            self._potential = Potential(
                g, P.F, g.weights, g.rank - 1, self._config.metric_scale, eta_factor_of(P, self._frame.eta_const)
            )
        except (SaitoError, ValueError) as e:
            return self._fail(e)
        return True

    def requestVerify(self, against_fixtures=False, fixture_dir: str = FIXTURE_DIR):
        """
        Runs eta constancy, Euler, WDVV, the algebra and intersection form
        checks and optionally the fixture comparison

        Returns
        --
        [bool] True: every check passed. False: fail
        """
        if not self.requestPotential():
            return False
        cfg = self._config
        P = self._potential
        reports = [
            verify_eta_constant(P),
            verify_euler(P),
            verify_wdvv(P, cfg.trials, cfg.seed, cfg.symbolic_wdvv),
            intersection_form_check(P, self._gft, self._frame.eta_const),
        ]
        try:
            structure_constants(P)
            reports.append(VerificationReport("algebra", True, "symmetric with unity e = d/dt_{}".format(self._group.coxeter_number)))
        except (SaitoError, ValueError, ZeroDivisionError) as e:
            reports.append(VerificationReport("algebra", False, str(e)))
        if against_fixtures:
            try:
                reports.extend(self.compareFixtures(FixtureSet.load(self._group, fixture_dir)))
            except (OSError, SaitoError) as e:
                reports.append(VerificationReport("fixtures", False, str(e)))
        self._reports = reports
        failed = [r for r in reports if not r.passed]
        for r in reports:
            (self._logger.info if r.passed else self._logger.error)(r.format())
        if failed:
            self._last_error = VerificationError(failed[0].format())
            return False
        return True

    ##################################################
    #               Fixture comparison               #
    ##################################################
    def compareFixtures(self, fx: FixtureSet) -> List[VerificationReport]:
        """One report per fixture section present in the file"""
        g = self._group
        reports = []
        if fx.metric:
            reports.append(self._compareEntries("fixtures-metric", "g", fx.metric, self._metric, complete=False))
        if fx.eta:
            reports.append(self._compareEntries("fixtures-eta", "eta", fx.eta, self._eta, complete=True))
        if fx.frame:
            bad = []
            for d, bracket in sorted(fx.frame.items()):
                a = g.degrees.index(d)
                if self._frame.bracket(a) != bracket:
                    bad.append("t_{} differs: computed {}".format(d, self._frame.bracket(a)))
                key = "t_{}.scale".format(d)
                if d in fx.frame_scale and key not in fx.anomalies:
                    if fx.frame_scale[d] != self._frame.scale_factors[a]:
                        bad.append("{} expected {}, computed {}".format(key, fx.frame_scale[d], self._frame.scale_factors[a]))
            reports.append(VerificationReport("fixtures-frame", not bad, "; ".join(bad)))
        if fx.potential is not None:
            F = self._potential.F
            bad = []
            for exps, c in fx.potential.terms():
                got = F.coefficient(exps)
                if got != c:
                    bad.append("coefficient of {}: expected {}, computed {}".format(
                        g.flat_ring.monomial(exps), c, got))
            reports.append(VerificationReport("fixtures-potential", not bad, "; ".join(bad[:3])))
        for key, reason in sorted(fx.anomalies.items()):
            self._logger.info("Published value %s skipped: %s", key, reason)
        return reports

    def _compareEntries(self, name, kind, expected, table: MetricTable, complete: bool) -> VerificationReport:
        bad = []
        listed = set()
        for (da, db), p in sorted(expected.items()):
            listed.add((min(da, db), max(da, db)))
            got = table.by_degrees(da, db)
            if got != p:
                bad.append("{}_{}_{} expected {}, computed {}".format(kind, da, db, p, got))
        if complete:
            d = self._group.degrees
            for a, b, p in table.pairs():
                if (d[a], d[b]) not in listed and not p.is_zero():
                    bad.append("{}_{}_{} is {} but not listed".format(kind, d[a], d[b], p))
        return VerificationReport(name, not bad, "; ".join(bad[:3]))

    ##################################################
    #               Get functions                    #
    ##################################################
    def getGroup(self):
        return self._group

    def getConfig(self) -> RunConfig:
        return self._config

    def getMetric(self) -> Optional[MetricTable]:
        return self._metric

    def getEta(self) -> Optional[MetricTable]:
        return self._eta

    def getFrame(self) -> Optional[FlatFrame]:
        return self._frame

    def getFlatMetric(self) -> Optional[MetricTable]:
        return self._gft

    def getPotential(self) -> Optional[Potential]:
        return self._potential

    def getReports(self) -> List[VerificationReport]:
        return list(self._reports)

    def getManifest(self) -> str:
        return encodeManifest(self._fields, self._artifacts)

    def getCacheRoot(self) -> str:
        return self._writer.root

    def lastError(self) -> Optional[BaseException]:
        return self._last_error

    def exitCode(self) -> int:
        e = self._last_error
        if e is None:
            return EXIT_OK
        if isinstance(e, VerificationError):
            return EXIT_VERIFICATION
        if isinstance(e, InconsistencyError):
            return EXIT_INCONSISTENT
        return EXIT_USAGE
