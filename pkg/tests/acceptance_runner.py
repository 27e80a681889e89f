#!/usr/bin/env python3
"""
Acceptance runner for the acoustic CWT toolkit.

Runs the quality scenarios in scenarios.json at full window settings:
1. Round-trip reconstruction of unit harmonics
2. Reassignment masking of a clean harmonic
3. The three-method denoising progression
4. Ridge placement and the calibration trace shape

Usage:
    python -m tests.acceptance_runner [--scenario NAME] [--tags core] [--threads 4]
"""

import argparse
import asyncio
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from acoustic_cwt.calibration import CausalityChecker, StreamObjective, optimize
from acoustic_cwt.config_loader import (
    get_runtime_config,
    get_synthesis_config,
    get_tonotopic_config,
    get_wavelet_config,
    get_window_config,
    load_config,
)
from acoustic_cwt.cwt_engine import StreamMode, WaveletTransformer, WindowSettings
from acoustic_cwt.denoise import DenoiseMethod, denoise_pipeline
from acoustic_cwt.errors import AcousticCWTError
from acoustic_cwt.oscillatory_synthesis import QuadratureSettings
from acoustic_cwt.signals_io import add_white_noise, gen_harmonic, six_a_corpus
from acoustic_cwt.wavelet_model import TonotopicMap, WaveletParams

logger = logging.getLogger(__name__)


@dataclass
class ScenarioResult:
    """Result of a single acceptance scenario."""
    name: str
    passed: bool
    expected: Any
    actual: Any
    error: Optional[str] = None
    duration_ms: float = 0
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Scenario:
    """A signal to process and the behaviour expected of it."""
    name: str
    kind: str
    inputs: Dict[str, Any]
    expected_behavior: Dict[str, Any]
    tags: List[str] = field(default_factory=list)
    preset: Optional[str] = None


class ScenarioEvaluator:
    """Evaluates measured quantities against expected outcomes."""

    @staticmethod
    def evaluate_min(actual: Optional[float], minimum: float) -> bool:
        return actual is not None and actual >= minimum

    @staticmethod
    def evaluate_max(actual: Optional[float], maximum: float) -> bool:
        return actual is not None and actual <= maximum

    @staticmethod
    def evaluate_near(actual: Optional[float], target: float, tolerance: float) -> bool:
        return actual is not None and abs(actual - target) <= tolerance

    @staticmethod
    def evaluate_increasing(values: List[float], strict: bool = False) -> bool:
        pairs = list(zip(values, values[1:]))
        if strict:
            return all(b > a for a, b in pairs)
        return all(b >= a for a, b in pairs)


class AcceptanceRunner:
    """Builds transformers per preset (banks come from the cache) and evaluates scenarios."""

    def __init__(self, threads: int = 1, results_dir: str = "tmp/acceptance_results",
                 config_path: Optional[str] = None):
        self.threads = threads
        self.results_dir = Path(results_dir)
        self.results_dir.mkdir(parents=True, exist_ok=True)
        self.evaluator = ScenarioEvaluator()
        self.config = load_config(config_path)
        self.params = WaveletParams.from_config(get_wavelet_config(self.config))
        self.tonotopic_map = TonotopicMap.from_config(get_tonotopic_config(self.config))
        self.quadrature = QuadratureSettings.from_config(get_synthesis_config(self.config))
        runtime = get_runtime_config(self.config)
        self.cache_dir = runtime["cache_dir"]
        self.use_cache = bool(runtime["use_cache"])
        self._transformers: Dict[Optional[str], WaveletTransformer] = {}

    def settings(self, preset: Optional[str]) -> WindowSettings:
        return WindowSettings.from_config(get_window_config(self.config), preset)

    def transformer(self, preset: Optional[str]) -> WaveletTransformer:
        if preset not in self._transformers:
            print(f"    Building wavelet bank for preset {preset or 'config'}...")
            self._transformers[preset] = WaveletTransformer.create(
                self.params, self.settings(preset), self.tonotopic_map, quadrature=self.quadrature,
                threads=self.threads, cache_dir=self.cache_dir, use_cache=self.use_cache)
        return self._transformers[preset]

    def load_scenarios(self, scenario_file: Optional[str] = None) -> List[Scenario]:
        """Load scenarios from file, defaulting to scenarios.json next to this runner."""
        path = Path(scenario_file) if scenario_file else Path(__file__).parent / "scenarios.json"
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        enabled = [s for s in data["scenarios"] if not s.get("disabled", False)]
        return [Scenario(**{k: v for k, v in s.items() if k != "disabled"}) for s in enabled]

    # -- scenario kinds ---------------------------------------------------------------

    def _round_trip(self, scenario: Scenario) -> Tuple[Dict[str, Any], List[Tuple[str, bool, Any]]]:
        inputs, expected = scenario.inputs, scenario.expected_behavior
        transformer = self.transformer(scenario.preset)
        sig = gen_harmonic(inputs["freq_hz"], inputs.get("duration_s", 5.0), transformer.settings.rate_hz)
        report = transformer.process_stream(sig.samples, StreamMode.PLAIN, threads=self.threads).report
        checks = [("min_rho", self.evaluator.evaluate_min(report.rho, expected["min_rho"]), expected["min_rho"])]
        return {"rho": report.rho}, checks

    def _masking(self, scenario: Scenario) -> Tuple[Dict[str, Any], List[Tuple[str, bool, Any]]]:
        inputs, expected = scenario.inputs, scenario.expected_behavior
        transformer = self.transformer(scenario.preset)
        sig = gen_harmonic(inputs["freq_hz"], inputs.get("duration_s", 1.0), transformer.settings.rate_hz)
        report = transformer.process_stream(sig.samples, StreamMode.REASSIGN_MASK, threads=self.threads).report
        deficit = None if report.rho is None else 1.0 - report.rho
        checks = [("max_one_minus_rho", self.evaluator.evaluate_max(deficit, expected["max_one_minus_rho"]),
                   expected["max_one_minus_rho"])]
        return {"one_minus_rho": deficit, "kept_fraction": report.kept_fraction}, checks

    def _denoise(self, scenario: Scenario) -> Tuple[Dict[str, Any], List[Tuple[str, bool, Any]]]:
        inputs, expected = scenario.inputs, scenario.expected_behavior
        transformer = self.transformer(scenario.preset)
        clean = gen_harmonic(inputs["freq_hz"], inputs.get("duration_s", 5.0), transformer.settings.rate_hz)
        noisy = add_white_noise(clean, inputs["level"], inputs["seed"], inputs.get("reference", "peak"))
        rhos = {}
        for method in DenoiseMethod:
            result = denoise_pipeline(noisy.samples, transformer, method, clean.samples, threads=self.threads)
            rhos[method.value] = result.rho_clean
        tolerance = expected.get("tolerance", 1e-3)
        checks = [(f"rho_{name}", self.evaluator.evaluate_near(rhos[name], target, tolerance), target)
                  for name, target in expected.get("rho", {}).items()]
        if "ordering" in expected:
            ordered = [rhos[name] for name in expected["ordering"]]
            checks.append(("ordering", self.evaluator.evaluate_increasing(ordered, strict=True),
                           " < ".join(expected["ordering"])))
        return rhos, checks

    def _ridge(self, scenario: Scenario) -> Tuple[Dict[str, Any], List[Tuple[str, bool, Any]]]:
        inputs = scenario.inputs
        transformer = self.transformer(scenario.preset)
        sig = gen_harmonic(inputs["freq_hz"], inputs.get("duration_s", 0.1), transformer.settings.rate_hz)
        grid = transformer.average_transform(sig.samples)
        measured = int(np.argmax(grid.modulus.max(axis=1)))
        expected_index = transformer.ridge_index(inputs["freq_hz"])
        tolerance = scenario.expected_behavior.get("index_tolerance", 1)
        checks = [("ridge_index", abs(measured - expected_index) <= tolerance, expected_index)]
        return {"ridge_index": measured, "scale": float(grid.scales[measured])}, checks

    def _calibration(self, scenario: Scenario) -> Tuple[Dict[str, Any], List[Tuple[str, bool, Any]]]:
        inputs, expected = scenario.inputs, scenario.expected_behavior
        settings = self.settings(scenario.preset)
        corpus = six_a_corpus(inputs.get("patch_duration_s", 1.0), settings.rate_hz)
        p0 = WaveletParams.from_pi_scaled(*inputs["initial_pi_scaled"])
        objective_fn = StreamObjective(corpus.samples, settings, self.tonotopic_map, self.threads,
                                       self.cache_dir, self.use_cache, self.quadrature)
        checker = CausalityChecker(rate_hz=settings.rate_hz, quadrature=self.quadrature)
        result = optimize(p0, objective_fn, checker, step_fractions=inputs.get("step_fractions", (0.10, 0.03, 0.01)))
        rhos = result.trace.pass_rhos
        improvement = rhos[-1] - rhos[0]
        accepted_causal = all(checker(entry.params) for entry in result.trace.entries if entry.accepted)
        checks = [
            ("non_decreasing", self.evaluator.evaluate_increasing(rhos), True),
            ("max_improvement", self.evaluator.evaluate_max(improvement, expected["max_improvement"]),
             expected["max_improvement"]),
            ("accepted_causal", accepted_causal, True),
        ]
        if "initial_rho" in expected:
            checks.append(("initial_rho", self.evaluator.evaluate_near(rhos[0], expected["initial_rho"],
                                                                       expected.get("tolerance", 5e-4)),
                           expected["initial_rho"]))
        return {"pass_rhos": rhos, "final": result.params.to_pi_scaled()}, checks

    # -- running ---------------------------------------------------------------------

    def run_single_scenario(self, scenario: Scenario) -> ScenarioResult:
        """Run a single scenario and evaluate results."""
        handlers = {
            "round_trip": self._round_trip,
            "masking": self._masking,
            "denoise": self._denoise,
            "ridge": self._ridge,
            "calibration": self._calibration,
        }
        start_time = time.time()
        try:
            if scenario.kind not in handlers:
                raise ValueError(f"Unknown scenario kind: {scenario.kind}")
            actual, checks = handlers[scenario.kind](scenario)
            return ScenarioResult(
                name=scenario.name,
                passed=all(ok for _, ok, _ in checks),
                expected=scenario.expected_behavior,
                actual=actual,
                duration_ms=(time.time() - start_time) * 1000,
                details={"checks": checks},
            )
        except (AcousticCWTError, KeyError, ValueError) as e:
            return ScenarioResult(
                name=scenario.name,
                passed=False,
                expected=scenario.expected_behavior,
                actual=None,
                error=f"{type(e).__name__}: {e}",
                duration_ms=(time.time() - start_time) * 1000,
            )

    async def run_all_scenarios(self, scenarios: List[Scenario]) -> List[ScenarioResult]:
        """Run scenarios one after another; each runs in a worker thread."""
        print(f"\n{'='*60}")
        print(f"Running {len(scenarios)} acceptance scenarios")
        print(f"{'='*60}\n")

        results = []
        for i, scenario in enumerate(scenarios, 1):
            print(f"[{i}/{len(scenarios)}] Scenario: {scenario.name} ({scenario.kind})")
            result = await asyncio.to_thread(self.run_single_scenario, scenario)
            results.append(result)

            status = "✅ PASS" if result.passed else "❌ FAIL"
            print(f"    {status} ({result.duration_ms / 1000:.1f}s) {result.actual}")
            if not result.passed:
                if result.error:
                    print(f"    Error: {result.error}")
                for check_name, check_passed, check_expected in result.details.get("checks", []):
                    if not check_passed:
                        print(f"    Failed check: {check_name} (expected: {check_expected})")
            print()
        return results

    def save_results(self, results: List[ScenarioResult]) -> Path:
        """Save scenario results to file."""
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        filename = self.results_dir / f"acceptance_{timestamp}.json"
        results_data = {
            "timestamp": timestamp,
            "threads": self.threads,
            "total": len(results),
            "passed": sum(1 for r in results if r.passed),
            "failed": sum(1 for r in results if not r.passed),
            "results": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "expected": r.expected,
                    "actual": r.actual,
                    "error": r.error,
                    "duration_ms": r.duration_ms,
                    "details": r.details,
                }
                for r in results
            ],
        }
        with open(filename, "w", encoding="utf-8") as f:
            json.dump(results_data, f, indent=2, default=str)
        print(f"\nResults saved to: {filename}")
        return filename

    def generate_report(self, results: List[ScenarioResult]) -> str:
        """Generate a human-readable report."""
        total = len(results)
        passed = sum(1 for r in results if r.passed)
        report = ["\n" + "=" * 60, "ACCEPTANCE REPORT", "=" * 60,
                  f"\nTotal: {total} | Passed: {passed} | Failed: {total - passed}"]
        if total:
            report.append(f"Pass Rate: {passed / total * 100:.1f}%\n")
        failed = [r for r in results if not r.passed]
        if failed:
            report.append("FAILED SCENARIOS:")
            report.append("-" * 40)
            for r in failed:
                report.append(f"\n❌ {r.name}")
                if r.error:
                    report.append(f"   Error: {r.error}")
                for check_name, check_passed, check_expected in r.details.get("checks", []):
                    if not check_passed:
                        report.append(f"   • {check_name}: expected {check_expected}")
        report.append("\n" + "=" * 60)
        return "\n".join(report)


async def run(args: argparse.Namespace) -> int:
    runner = AcceptanceRunner(threads=args.threads, config_path=args.config)
    scenarios = runner.load_scenarios(args.scenarios_file)

    if args.scenario:
        scenarios = [s for s in scenarios if s.name == args.scenario]
        if not scenarios:
            print(f"No scenario found with name: {args.scenario}")
            return 1
    tags_filter = args.tags.split(",") if args.tags else None
    if tags_filter:
        scenarios = [s for s in scenarios if any(t in s.tags for t in tags_filter)]
    elif not args.scenario:
        scenarios = [s for s in scenarios if "slow" not in s.tags]

    results = await runner.run_all_scenarios(scenarios)
    runner.save_results(results)
    print(runner.generate_report(results))
    if results and all(r.passed for r in results):
        print("\n✅ ALL SCENARIOS PASSED!")
        return 0
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Acoustic CWT acceptance runner")
    parser.add_argument("--scenario", help="Run specific scenario by name")
    parser.add_argument("--tags", help="Filter by tags (comma-separated); 'slow' scenarios need this")
    parser.add_argument("--scenarios-file", help="Path to scenarios JSON file")
    parser.add_argument("--config", default=None, help="Path to a JSON config file")
    parser.add_argument("--threads", type=int, default=1, help="Worker threads")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))
    return asyncio.run(run(args))


if __name__ == "__main__":
    sys.exit(main())
