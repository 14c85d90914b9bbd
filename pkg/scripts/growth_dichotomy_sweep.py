"""Classification sweep over polynomial up-rate growth.

Rates up(i) = (i+1)^p with a constant unit return column.  Around p = 1 the
chain passes from strongly ergodic to explosive; this prints the verdict
ladder along the way.

    python3 scripts/growth_dichotomy_sweep.py --N 2000
"""

import argparse
from dataclasses import dataclass, field

from singlebirth import AnalysisOptions, analyze, model_constant_column


@dataclass
class SweepConfig:
    exponents: tuple = (0.5, 1.0, 1.1, 1.5, 2.0)
    N: int = 2000
    opts: AnalysisOptions = field(default_factory=AnalysisOptions)


def verdict_str(report, key: str) -> str:
    v = report.verdicts.get(key)
    return v.status.value if v is not None else "-"


def run(cfg: SweepConfig) -> None:
    print(f"{'p':>5} {'unique':>14} {'recurrent':>14} {'ergodic':>14} "
          f"{'strongly':>14} {'kappa_prime':>12}")
    for p in cfg.exponents:
        model = model_constant_column(lambda i: 1.0, lambda i, p=p: float((i + 1) ** p))
        report = analyze(model, cfg.N, cfg.opts)
        uq = report.verdicts.get("unique")
        kp = uq.diagnostics.get("kappa_prime") if uq is not None else None
        print(f"{p:5.2f} {verdict_str(report, 'unique'):>14} "
              f"{verdict_str(report, 'recurrent'):>14} "
              f"{verdict_str(report, 'ergodic'):>14} "
              f"{verdict_str(report, 'strongly_ergodic'):>14} "
              f"{kp if kp is None else format(kp, '12.4f')}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--exponents", type=float, nargs="+", default=None)
    args = p.parse_args()
    cfg = SweepConfig(N=args.N)
    if args.exponents:
        cfg = SweepConfig(N=args.N, exponents=tuple(args.exponents))
    run(cfg)


if __name__ == "__main__":
    main()
