"""
bernreach Benchmark Evaluation Framework
3-Tier Report: Verdicts, Bernstein vs Interval Precision, Runtime

Run from the repository root: python -m evaluation.run_evaluation [ex1,ex2,...]
"""
import json
import sys
from collections import defaultdict
from datetime import datetime
from pathlib import Path

import numpy as np

from bernreach import settings
from bernreach.benchmarks import BENCHMARKS, run_suite

RESULTS_PATH = Path("evaluation/evaluation_results.json")
REPORT_PATH = Path("evaluation/evaluation_report.md")


class EvaluationFramework:
    def __init__(self, names=None, kinds=("linear", "tanh"), overrides=None):
        self.names = list(names or BENCHMARKS)
        self.kinds = list(kinds)
        self.overrides = overrides or {}
        self.results = []
        self.start_time = None

    def run_evaluation(self):
        """Run every benchmark under both controller abstractions."""
        self.start_time = datetime.now()

        print("=" * 70)
        print("BERNREACH BENCHMARK EVALUATION")
        print(f"Benchmarks: {', '.join(self.names)} | Controllers: {', '.join(self.kinds)}")
        print(f"Started: {self.start_time.strftime('%Y-%m-%d %H:%M:%S')}")
        print("=" * 70)

        for name in self.names:
            records = run_suite([name], self.kinds, overrides=self.overrides)
            for r in records:
                status = "✓" if r.get("kind") == "Yes" else "✗" if "error" in r else "?"
                print(f"[{r['benchmark']}/{r['controller']}/{r['mode']}] {status} {r.get('verdict', r.get('error'))} ({r.get('elapsed', 0):.1f}s)")
            self.results.extend(records)

        self._save_results()
        return self.generate_report()

    def _save_results(self):
        RESULTS_PATH.parent.mkdir(parents=True, exist_ok=True)
        with open(RESULTS_PATH, "w", encoding="utf-8") as f:
            json.dump(self.results, f, ensure_ascii=False, indent=2)

    def generate_report(self):
        report = []
        report.append("# BERNREACH BENCHMARK REPORT")
        report.append(f"\n**Date**: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        report.append(f"**Runs**: {len(self.results)}")

        # ══════════════════════════════════════════════════════════════════
        # TIER 1: VERDICTS
        # ══════════════════════════════════════════════════════════════════
        report.append("\n## TIER 1: VERDICTS\n")
        report.append("| Benchmark | Controller | Mode | Verdict | max ε̄ | max width | Time (s) |")
        report.append("|-----------|------------|------|---------|--------|-----------|----------|")
        for r in self.results:
            if "error" in r:
                report.append(f"| {r['benchmark']} | {r['controller']} | {r['mode']} | ERROR | - | - | - |")
                continue
            report.append(
                f"| {r['benchmark']} | {r['controller']} | {r['mode']} | {r['verdict']} | "
                f"{r['max_eps']:.3g} | {r['max_width']:.3g} | {r['elapsed']:.1f} |"
            )

        # ══════════════════════════════════════════════════════════════════
        # TIER 2: BERNSTEIN VS INTERVAL
        # ══════════════════════════════════════════════════════════════════
        report.append("\n## TIER 2: BERNSTEIN VS INTERVAL ABSTRACTION\n")
        report.append("| Benchmark | Controller | Bernstein | Interval | Common steps | Narrower at every step |")
        report.append("|-----------|------------|-----------|----------|--------------|------------------------|")
        for (bench, kind), modes in sorted(self._pairs().items()):
            bern, iv = modes.get("bernstein"), modes.get("interval")
            if not bern or not iv:
                continue
            common = min(len(bern["step_widths"]), len(iv["step_widths"]))
            dominated = all(b <= i + 1e-9 for b, i in zip(bern["step_widths"][:common], iv["step_widths"][:common]))
            report.append(f"| {bench} | {kind} | {bern['verdict']} | {iv['verdict']} | {common} | {'✓' if dominated else '✗'} |")

        # ══════════════════════════════════════════════════════════════════
        # TIER 3: RUNTIME
        # ══════════════════════════════════════════════════════════════════
        report.append("\n## TIER 3: RUNTIME\n")
        times = defaultdict(list)
        for r in self.results:
            if "elapsed" in r:
                times[r["mode"]].append(r["elapsed"])
        report.append("| Mode | Runs | Mean (s) | P95 (s) | Max (s) |")
        report.append("|------|------|----------|---------|---------|")
        for mode, values in sorted(times.items()):
            report.append(f"| {mode} | {len(values)} | {np.mean(values):.2f} | {np.percentile(values, 95):.2f} | {max(values):.2f} |")

        # ══════════════════════════════════════════════════════════════════
        # SUMMARY
        # ══════════════════════════════════════════════════════════════════
        report.append("\n## SUMMARY\n")
        proven = sum(1 for r in self.results if r.get("kind") == "Yes")
        errors = sum(1 for r in self.results if "error" in r)
        report.append(f"- **Runs**: {len(self.results)}")
        report.append(f"- **Yes verdicts**: {proven}")
        report.append(f"- **Errors**: {errors}")
        report.append(f"- **Wall time**: {(datetime.now() - self.start_time).seconds // 60} min")

        report_text = "\n".join(report)
        with open(REPORT_PATH, "w", encoding="utf-8") as f:
            f.write(report_text)

        print("\n" + "=" * 70)
        print("EVALUATION COMPLETE!")
        print(f"Report saved to: {REPORT_PATH}")
        print("=" * 70)

        return report_text

    def _pairs(self):
        pairs = defaultdict(dict)
        for r in self.results:
            if "error" not in r:
                pairs[(r["benchmark"], r["controller"])][r["mode"]] = r
        return pairs


if __name__ == "__main__":
    settings.configure_logging()
    names = sys.argv[1].split(",") if len(sys.argv) > 1 else None

    evaluator = EvaluationFramework(names=names)
    report = evaluator.run_evaluation()
    print("\n" + report)
