"""Command routing, manifests and exit codes for the command-line tool"""
import json
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from app import __version__
from app.models.errors import UnidiophError, UsageError
from app.models.schemas import ExperimentManifest, QuadratureEstimate
from app.services import dirichlet_search as search
from app.services import finite_action as finite
from app.services import haar_measure as haar
from app.services import torus_classical as torus
from app.services.displacement import phi_empirical, phi_unitary, phi_via_hermitian_part
from app.services.finite_catalog import action_by_name, action_from_tables, catalog
from app.utils import serialization as codec
from app.utils.validate import validator

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

TABULAR_COMMANDS = {"phi-curve", "torus-phi-curve"}
THEOREM4_MAX_ORDER = 24
EMPIRICAL_SAMPLES = 10**4


@dataclass
class Outcome:
    """Handler result: the payload, whether every checked bound held, and CSV rows if tabular"""
    result: Any
    passed: bool = True
    rows: Optional[List[Any]] = None


@dataclass
class RunRecord:
    payload: str
    exit_code: int
    manifest: Optional[ExperimentManifest] = None


def _vector_payload(v: np.ndarray) -> Dict[str, List[float]]:
    return {"re": v.real.tolist(), "im": v.imag.tolist()}


class ExperimentOrchestrator:
    """Maps subcommand names to handlers and turns their outcomes into payloads.

    Every handler takes the plain parameter dict stored in the manifest, so a manifest
    replays through exactly the code path that produced it.

    Attributes:
        commands (Dict): Mapping of subcommand names to handler methods
    """

    def __init__(self):
        self.commands: Dict[str, Callable[[Dict[str, Any]], Outcome]] = {
            "phi": self._handle_phi,
            "phi-dist": self._handle_phi_dist,
            "phi-curve": self._handle_phi_curve,
            "delta-set": self._handle_delta_set,
            "delta-powers": self._handle_delta_powers,
            "delta-jk": self._handle_delta_jk,
            "delta-jkl": self._handle_delta_jkl,
            "verify": self._handle_verify,
            "torus-delta": self._handle_torus_delta,
            "torus-phi-curve": self._handle_torus_phi_curve,
            "finite": self._handle_finite,
        }
        self.finite_actions: Dict[str, Callable[[Any, Dict[str, Any]], Outcome]] = {
            "verify": self._finite_verify,
            "phi": self._finite_phi,
            "delta": self._finite_delta,
            "theorem4": self._finite_theorem4,
            "corollary": self._finite_corollary,
            "metric": self._finite_metric,
        }

    # Entry points

    def execute(self, command: str, params: Dict[str, Any]) -> RunRecord:
        """Run one command; library errors become exit codes, never tracebacks"""
        handler = self.commands.get(command)
        if handler is None:
            return self._failure(UsageError(f"unknown command '{command}'", flag="command"))
        fmt = params.get("format", "json")
        try:
            outcome = handler(params)
            payload = self._render(command, outcome, fmt)
        except UnidiophError as exc:
            return self._failure(exc)
        except KeyError as exc:
            flag = str(exc.args[0]).replace("_", "-")
            return self._failure(UsageError(f"{command} requires --{flag}", flag=flag))
        except np.linalg.LinAlgError as exc:
            logger.error(f"{command}: linear algebra failure: {exc}")
            return RunRecord(json.dumps({"error": "LinAlgError", "message": str(exc)}), EXIT_NUMERICAL)
        except Exception as exc:
            logger.exception(f"{command}: unexpected failure: {exc}")
            return RunRecord(codec.dumps({"error": type(exc).__name__, "message": str(exc)}), EXIT_NUMERICAL)

        exit_code = EXIT_OK if outcome.passed else EXIT_VIOLATION
        if not outcome.passed:
            logger.warning(f"{command}: bound violation detected")
        stored = payload if fmt == "csv" else json.loads(payload)
        manifest = ExperimentManifest(command=command, parameters=params, version=__version__, result=stored)
        return RunRecord(payload, exit_code, manifest)

    def replay(self, manifest: ExperimentManifest) -> RunRecord:
        """Re-run a manifest; exit 1 unless the payload is byte-identical"""
        if manifest.version != __version__:
            logger.warning(f"replaying a {manifest.version} manifest with {__version__}")
        record = self.execute(manifest.command, dict(manifest.parameters))
        if record.exit_code not in (EXIT_OK, EXIT_VIOLATION):
            return record
        if isinstance(manifest.result, str):
            expected = manifest.result
        else:
            expected = codec.dumps(manifest.result)
        identical = expected == record.payload
        if not identical:
            logger.error(f"replay of '{manifest.command}' produced a different payload")
        summary = {"command": manifest.command, "identical": identical, "replayed_exit_code": record.exit_code}
        return RunRecord(codec.dumps(summary), EXIT_OK if identical else EXIT_VIOLATION)

    def _failure(self, exc: UnidiophError) -> RunRecord:
        logger.error(f"{type(exc).__name__}: {exc.message}" + (f" ({exc.detail})" if exc.detail else ""))
        return RunRecord(codec.dumps(exc.to_dict()), exc.exit_code)

    def _render(self, command: str, outcome: Outcome, fmt: str) -> str:
        if fmt == "csv":
            if command not in TABULAR_COMMANDS or outcome.rows is None:
                raise UsageError(f"--format csv is only available for {sorted(TABULAR_COMMANDS)}", flag="format")
            return codec.rows_to_csv(outcome.rows)
        return codec.dumps(outcome.result)

    # Unitary group

    def _handle_phi(self, params: Dict[str, Any]) -> Outcome:
        A = codec.load_unitary(params["matrix"])
        value = phi_unitary(A)
        result = {
            "phi": value.value,
            "phi_hermitian": phi_via_hermitian_part(A),
            "witness": _vector_payload(value.witness),
            "n": A.dim,
        }
        if params.get("empirical") or params.get("samples"):
            samples = params.get("samples") or EMPIRICAL_SAMPLES
            result["phi_empirical"] = phi_empirical(A, samples, params.get("seed", 0))
        return Outcome(result)

    def _handle_phi_dist(self, params: Dict[str, Any]) -> Outcome:
        n, t = params["n"], params["t"]
        method = params.get("method", "mc")
        workers = params.get("workers", 1)
        if method == "mc":
            est = haar.phi_distribution_mc(n, t, params["samples"], params["seed"], workers)
        elif method == "eigen":
            est = haar.phi_distribution_eigen_mc(n, t, params["samples"], params["seed"], workers)
        elif method == "quadrature":
            grid = params.get("grid", 64)
            est = QuadratureEstimate(t=t, n=n, grid_points=grid, estimate=haar.weyl_phi_quadrature(n, t, grid))
        else:
            raise UsageError(f"unknown method '{method}'", flag="method")
        result = est.model_dump(mode="json")
        if t > 2:
            result["lower_bound"] = None  # bound is only stated on (0, 2]; Φ(t) = 1 here
        else:
            result["lower_bound"] = haar.phi_lower_bound(n, t) if t > 0 else 0.0
        return Outcome(result)

    def _handle_phi_curve(self, params: Dict[str, Any]) -> Outcome:
        rows = haar.phi_curve(
            params["n"], params.get("t_min", 0.0), params.get("t_max", 2.0), params["steps"],
            n_samples=params.get("samples", 10**4), seed=params.get("seed", 0),
            method=params.get("method", "mc"), grid_points=params.get("grid", 64),
            workers=params.get("workers", 1),
        )
        return Outcome(rows, rows=rows)

    def _unitary_inputs(self, params: Dict[str, Any], names: List[str]) -> list:
        """Matrices from files, or Haar samples from (seed, 0) when no files are given"""
        if all(params.get(name) for name in names):
            return [codec.load_unitary(params[name]) for name in names]
        if any(params.get(name) for name in names):
            raise UsageError(f"give all of {names} or none of them", flag=names[0])
        if "n" not in params or params["n"] is None:
            raise UsageError(f"either {names} or --n with --seed is required", flag="n")
        return haar.haar_samples(params["n"], len(names), params.get("seed", 0), 0)

    def _handle_delta_set(self, params: Dict[str, Any]) -> Outcome:
        workers = params.get("workers", 1)
        if params.get("matrices"):
            sets = codec.load_unitary_set(params["matrices"])
        else:
            if not params.get("n") or not params.get("cardinality"):
                raise UsageError("either --matrices or --n with --cardinality is required", flag="matrices")
            sets = haar.haar_samples(params["n"], params["cardinality"], params.get("seed", 0), 0)
        result = search.delta_set(sets, workers)
        return Outcome(result, passed=result.satisfied)

    def _handle_delta_powers(self, params: Dict[str, Any]) -> Outcome:
        (a,) = self._unitary_inputs(params, ["a"])
        result = search.delta_powers(a, params["n_max"])
        return Outcome(result, passed=result.satisfied)

    def _handle_delta_jk(self, params: Dict[str, Any]) -> Outcome:
        J = validator.positive_int(params["J"], "J")
        K = validator.positive_int(params["K"], "K")
        A, B = self._unitary_inputs(params, ["a", "b"])
        result = search.delta_jk(A, B, J, K, workers=params.get("workers", 1))
        return Outcome(result, passed=result.satisfied)

    def _handle_delta_jkl(self, params: Dict[str, Any]) -> Outcome:
        A, B, C = self._unitary_inputs(params, ["a", "b", "c"])
        result = search.delta_jkl(A, B, C, params["J"], params["K"], params["L"], workers=params.get("workers", 1))
        # conjectural bound: reported, not enforced
        return Outcome(result)

    def _handle_verify(self, params: Dict[str, Any]) -> Outcome:
        theorem = str(params["theorem"])
        workers = params.get("workers", 1)
        seed = params.get("seed", 0)
        if theorem == "1":
            report = search.verify_theorem1(params["n"], params["cardinality"], params["trials"], seed, workers)
        elif theorem == "2":
            report = search.verify_theorem2(params["n"], params["J"], params["K"], params["trials"], seed, workers)
        elif theorem == "corollary":
            report = search.verify_corollary(params["n"], params["n_max"], params["trials"], seed, workers)
        elif theorem == "3-unitary":
            report = search.verify_theorem3_unitary(
                params["n"], params["cardinality"], params["trials"], seed,
                method=params.get("method") or "quadrature", grid_points=params.get("grid", 64),
            )
        elif theorem == "3":
            actions = self._catalog_or_one(params)
            report = finite.sweep_theorem3(
                actions, params.get("subset_size", 4), params.get("samples") or 1000, seed, workers
            )
        elif theorem == "4":
            actions = self._catalog_or_one(params, bounded_order=True)
            report = finite.sweep_theorem4(actions, params.get("max_exponent", 2), workers)
        else:
            raise UsageError(f"unknown theorem '{theorem}'", flag="theorem")
        return Outcome(report, passed=report.passed)

    def _catalog_or_one(self, params: Dict[str, Any], bounded_order: bool = False) -> list:
        if params.get("group") or params.get("table"):
            return [self._load_action(params)]
        actions = catalog()
        if bounded_order:
            actions = [a for a in actions if a.order <= THEOREM4_MAX_ORDER]
        return actions

    # Torus

    def _handle_torus_delta(self, params: Dict[str, Any]) -> Outcome:
        alphas = codec.load_points(params["alphas"])
        ks = params["ks"]
        if isinstance(ks, str):
            ks = codec.parse_int_list(ks, "ks")
        result = torus.torus_delta(alphas, ks, workers=params.get("workers", 1))
        return Outcome(result, passed=result.satisfied)

    def _handle_torus_phi_curve(self, params: Dict[str, Any]) -> Outcome:
        rows = torus.torus_phi_curve(
            params["l"], params["steps"], n_samples=params.get("samples", 10**4),
            seed=params.get("seed", 0), workers=params.get("workers", 1),
        )
        return Outcome(rows, rows=rows)

    # Finite actions

    def _load_action(self, params: Dict[str, Any]):
        if params.get("table"):
            return action_from_tables(codec.load_table(params["table"]))
        if params.get("group"):
            return action_by_name(params["group"], params.get("metric"))
        raise UsageError("either --group or --table is required", flag="group")

    def _handle_finite(self, params: Dict[str, Any]) -> Outcome:
        sub = params.get("action")
        handler = self.finite_actions.get(sub)
        if handler is None:
            raise UsageError(f"unknown finite action '{sub}'", flag="action")
        return handler(self._load_action(params), params)

    def _subset(self, params: Dict[str, Any]) -> Optional[List[int]]:
        subset = params.get("subset")
        if isinstance(subset, str):
            subset = codec.parse_int_list(subset, "subset")
        return subset

    def _finite_verify(self, action, params: Dict[str, Any]) -> Outcome:
        subset = self._subset(params)
        if subset:
            report = finite.verify_theorem3_exact(action, subset)
        else:
            report = finite.sweep_theorem3(
                [action], params.get("subset_size", 4), params.get("samples") or 1000, params.get("seed", 0)
            )
        return Outcome(report, passed=report.passed)

    def _finite_phi(self, action, params: Dict[str, Any]) -> Outcome:
        g = params["element"]
        result = {"element": g, "phi": str(finite.phi_exact(action, g))}
        if params.get("t") is not None:
            result["t"] = str(params["t"])
            result["Phi"] = str(finite.Phi_exact(action, str(params["t"])))
        return Outcome(result)

    def _finite_delta(self, action, params: Dict[str, Any]) -> Outcome:
        subset = self._subset(params) or []
        return Outcome({"subset": subset, "delta": str(finite.delta_exact(action, subset))})

    def _finite_theorem4(self, action, params: Dict[str, Any]) -> Outcome:
        report = finite.verify_theorem4_exact(action, params["a"], params["b"], params["m_max"], params["n_max"])
        return Outcome(report, passed=report.passed)

    def _finite_corollary(self, action, params: Dict[str, Any]) -> Outcome:
        report = finite.verify_corollary_exact(action, params["a"], params["n_max"])
        return Outcome(report, passed=report.passed)

    def _finite_metric(self, action, params: Dict[str, Any]) -> Outcome:
        report = finite.metric_report(action)
        return Outcome(report, passed=report.passed)
