"""Regenerate the benchmark report from the shipped reference recalls.

The six-dataset recall grid bundled with the package stands in for a
finished training campaign: the report stage is run against it alone,
producing the rendered table, the decline ranking, and the stratified
statistics without touching any images.
"""

from pathlib import Path

from pcaharmony.cli import main as cli
from pcaharmony.experiment import write_reference_results_csv

OUT = Path("demo_out/reference_report")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    results = OUT / "results"
    results.mkdir(exist_ok=True)
    write_reference_results_csv(results / "results.csv")

    config = OUT / "run.ini"
    config.write_text("[run]\nwork_dir = work\n")
    code = cli(["run", "--config", str(config), "--results-from", str(results)])
    assert code == 0

    reports = OUT / "work" / "reports"
    print("\n" + (reports / "table2.md").read_text())
    print("per-stratum statistics:")
    print((reports / "table3.csv").read_text())
    print(f"full reports under {reports}")


if __name__ == "__main__":
    main()
