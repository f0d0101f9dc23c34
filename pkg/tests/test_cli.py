import csv
import json

import pytest

from vockit import cli
from vockit.jsonlio import write_records
from vockit.study import Rating, RatingsStore, load_study


def run(argv):
    return cli.main(argv)


def write_reviews(path, n=4):
    write_records(path, (
        {"id": f"r{i}", "text": f"Great product number {i}. Dried fast!", "category": "stain"}
        for i in range(n)
    ))


def write_pairs(path, n):
    write_records(path, (
        {"verbatim_id": f"p{i}", "text": f"Review text {i} goes here.",
         "category": "stain", "cn": f"Able to get benefit {i}"}
        for i in range(n)
    ))


def write_pool(path, n):
    write_records(path, (
        {"verbatim_id": f"n{i}", "doc_id": "d", "ordinal": i,
         "text": f"Uninformative sentence {i}.", "category": "stain", "label": "uninformative"}
        for i in range(n)
    ))


class TestIngestCommand:
    def test_reviews_to_verbatims(self, tmp_path, capsys):
        reviews = tmp_path / "reviews.jsonl"
        write_reviews(reviews)
        out = tmp_path / "verbatims.jsonl"
        assert run(["ingest", "--path", str(reviews), "--kind", "review",
                    "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 8  # two sentences per review
        assert (tmp_path / "verbatims.jsonl.manifest.json").exists()

    def test_bad_input_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        code = run(["ingest", "--path", str(bad), "--kind", "review",
                    "--out", str(tmp_path / "v.jsonl")])
        assert code == 2
        assert "error[data]" in capsys.readouterr().err

    def test_usage_error_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            run(["ingest", "--kind", "review"])
        assert exit_info.value.code == 1
        assert "error[usage]" in capsys.readouterr().err


class TestDatasetCommands:
    def test_build_counts_and_determinism(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 40)
        write_pool(pool, 100)
        out_a = tmp_path / "run_a"
        out_b = tmp_path / "run_b"
        base = ["dataset", "build", "--positives", str(pairs), "--negatives-pool", str(pool),
                "--neg-count", "5", "--ratio", "0.8", "--seed", "7"]
        assert run(base + ["--out-dir", str(out_a)]) == 0
        assert run(base + ["--out-dir", str(out_b)]) == 0
        assert (out_a / "train.jsonl").read_text().splitlines().__len__() == 32
        assert (out_a / "validation.jsonl").read_text().splitlines().__len__() == 8
        assert (out_a / "negatives.jsonl").read_text().splitlines().__len__() == 5
        for name in ("train.jsonl", "validation.jsonl", "negatives.jsonl", "manifest.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_sweep_builds_each_count_and_collates(self, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 20)
        write_pool(pool, 50)
        out = tmp_path / "sweep"
        assert run(["dataset", "sweep", "--positives", str(pairs),
                    "--negatives-pool", str(pool), "--neg-counts", "2,6",
                    "--ratio", "0.8", "--seed", "3", "--out-dir", str(out)]) == 0
        report = json.loads((out / "sweep_report.json").read_text())
        assert [entry["neg_count"] for entry in report["sweeps"]] == [2, 6]
        assert (out / "neg-2" / "train.jsonl").exists()
        assert (out / "neg-6" / "negatives.jsonl").read_text().splitlines().__len__() == 6

    def test_sweep_scores_responses_per_count(self, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 10)
        write_pool(pool, 40)
        out = tmp_path / "sweep"
        # first pass builds the datasets so we can fabricate responses
        assert run(["dataset", "sweep", "--positives", str(pairs),
                    "--negatives-pool", str(pool), "--neg-counts", "2,4",
                    "--probe-count", "3", "--ratio", "0.8", "--seed", "3",
                    "--out-dir", str(out)]) == 0
        for count in (2, 4):
            manifest = json.loads((out / f"neg-{count}" / "manifest.json").read_text())
            gold = manifest["provenance"]["validation"] + manifest["provenance"]["probe"]
            write_records(tmp_path / f"resp-{count}.jsonl", (
                {"verbatim_id": e["example_id"], "prompt_style": "sft", "model_name": "m",
                 "statement": "some need" if e["polarity"] == "positive" else None,
                 "raw_response": "x", "latency_ms": 1.0, "error": None}
                for e in gold
            ))
        assert run(["dataset", "sweep", "--positives", str(pairs),
                    "--negatives-pool", str(pool), "--neg-counts", "2,4",
                    "--probe-count", "3", "--ratio", "0.8", "--seed", "3",
                    "--out-dir", str(out),
                    "--responses", str(tmp_path / "resp-{count}.jsonl")]) == 0
        report = json.loads((out / "sweep_report.json").read_text())
        for entry in report["sweeps"]:
            assert entry["report"]["false_negative_rate"] == 0.0
            assert entry["report"]["spurious_rate"] == 0.0
            assert entry["report"]["n_negatives"] == 3

    def test_score_command(self, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 10)
        write_pool(pool, 30)
        out = tmp_path / "ds"
        run(["dataset", "build", "--positives", str(pairs), "--negatives-pool", str(pool),
             "--neg-count", "3", "--probe-count", "4", "--ratio", "0.8", "--seed", "1",
             "--out-dir", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        gold_ids = [e["example_id"] for e in manifest["provenance"]["validation"]]
        gold_ids += [e["example_id"] for e in manifest["provenance"]["probe"]]
        responses = tmp_path / "responses.jsonl"
        write_records(responses, (
            {"verbatim_id": gid, "prompt_style": "sft", "model_name": "stub",
             "statement": None, "raw_response": "[]", "latency_ms": 1.0, "error": None}
            for gid in gold_ids
        ))
        report_path = tmp_path / "report.json"
        assert run(["dataset", "score", "--dataset-dir", str(out),
                    "--responses", str(responses), "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["false_negative_rate"] == 1.0  # everything answered empty
        assert report["spurious_rate"] == 0.0


class TestReplay:
    def test_run_manifest_reexecutes_byte_identically(self, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 30)
        write_pool(pool, 80)
        original = tmp_path / "original"
        assert run(["dataset", "build", "--positives", str(pairs),
                    "--negatives-pool", str(pool), "--neg-count", "4",
                    "--ratio", "0.8", "--seed", "11", "--out-dir", str(original)]) == 0

        manifest = json.loads((original / "run_manifest.json").read_text())
        replay_dir = tmp_path / "replay"
        argv = [str(replay_dir) if a == str(original) else a for a in manifest["argv"]]
        assert run(argv) == 0
        for name in manifest["outputs"]:
            assert (replay_dir / name).read_bytes() == (original / name).read_bytes()
        # run manifests differ only in their timestamp field
        a = json.loads((original / "run_manifest.json").read_text())
        b = json.loads((replay_dir / "run_manifest.json").read_text())
        a.pop("created_at"), b.pop("created_at")
        a.pop("argv"), b.pop("argv")  # differ by out-dir by construction
        assert a == b


class TestExtractCommand:
    def test_unreachable_backend_exits_3_with_markers(self, tmp_path, capsys):
        verbatims = tmp_path / "v.jsonl"
        write_pool(verbatims, 3)
        out = tmp_path / "extractions.jsonl"
        code = run(["extract", "--verbatims", str(verbatims), "--style", "sft",
                    "--category", "stain", "--endpoint", "http://127.0.0.1:9/v1/chat",
                    "--model", "m", "--max-retries", "0", "--timeout", "0.2",
                    "--out", str(out)])
        assert code == 3
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(records) == 3
        assert all(r["error"] for r in records)
        assert "error[backend]" in capsys.readouterr().err


class TestCoverageCommands:
    def write_inputs(self, tmp_path, statements=120, needs=6):
        mapping = tmp_path / "mapping.jsonl"
        universe = tmp_path / "universe.txt"
        write_records(mapping, (
            {"statement_id": f"s{i:03d}", "cn_ids": [f"cn{i % needs}"] if i % 3 else []}
            for i in range(statements)
        ))
        universe.write_text("".join(f"cn{j}\n" for j in range(needs)))
        return mapping, universe

    def test_fit_writes_report(self, tmp_path):
        mapping, universe = self.write_inputs(tmp_path)
        out = tmp_path / "fit.json"
        assert run(["coverage", "fit", "--mapping", str(mapping), "--universe", str(universe),
                    "--b", "4", "--num-blocks", "400", "--seed", "2", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["converged"] is True
        assert report["alpha"] > 0 and report["beta"] > 0
        assert report["block_size"] == 4

    def test_curve_with_fixed_parameters_hits_paper_value(self, tmp_path):
        mapping, universe = self.write_inputs(tmp_path)
        out = tmp_path / "curve.csv"
        assert run(["coverage", "curve", "--mapping", str(mapping), "--universe", str(universe),
                    "--b", "50", "--n-max", "80", "--alpha", "1.054", "--beta", "3.133",
                    "--seed", "0", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = {int(r["statements"]): r for r in csv.DictReader(fh)}
        assert abs(float(rows[4000]["expected"]) - 0.968) <= 0.005
        assert abs(float(rows[1000]["expected"]) - 0.877) <= 0.005

    def test_alpha_without_beta_rejected(self, tmp_path, capsys):
        mapping, universe = self.write_inputs(tmp_path)
        code = run(["coverage", "curve", "--mapping", str(mapping), "--universe", str(universe),
                    "--n-max", "5", "--alpha", "1.0", "--out", str(tmp_path / "c.csv")])
        assert code == 2


class TestStudyCommands:
    def setup_study(self, tmp_path):
        verbatims = tmp_path / "verbatims.jsonl"
        rows = []
        i = 0
        for label, count in (("verbatim", 4), ("informative", 2), ("uninformative", 2)):
            for _ in range(count):
                rows.append({"verbatim_id": f"v{i:02d}", "doc_id": "d", "ordinal": i,
                             "text": f"Review sentence {i}.", "category": "stain",
                             "label": label})
                i += 1
        write_records(verbatims, rows)

        def extraction_rows(produce_all):
            out = []
            for row in rows:
                absent = not produce_all and row["label"] != "verbatim"
                out.append({
                    "verbatim_id": row["verbatim_id"], "prompt_style": "sft",
                    "model_name": "m", "statement": None if absent else f"Need from {row['verbatim_id']}",
                    "raw_response": "[]" if absent else f"Need from {row['verbatim_id']}",
                    "latency_ms": 1.0, "error": None,
                })
            return out

        alpha = tmp_path / "alpha.jsonl"
        beta = tmp_path / "beta.jsonl"
        gamma = tmp_path / "gamma.jsonl"
        write_records(alpha, extraction_rows(False))
        write_records(beta, extraction_rows(True))
        write_records(gamma, extraction_rows(True))
        decoys = tmp_path / "decoys.txt"
        decoys.write_text("Able to fall back on a real need\nAnother genuine need\n")
        design = tmp_path / "design.json"
        design.write_text(json.dumps({
            "study_id": "cli-study",
            "raters": ["r1", "r2", "r3"],
            "seed": 13,
            "sample_spec": {"verbatim": 4, "informative": 2, "uninformative": 2},
        }))
        study_path = tmp_path / "study.json"
        code = run(["study", "create", "--design", str(design), "--verbatims", str(verbatims),
                    "--statements", f"method_alpha={alpha}",
                    "--statements", f"method_beta={beta}",
                    "--statements", f"method_gamma={gamma}",
                    "--decoys", str(decoys), "--out", str(study_path)])
        assert code == 0
        return study_path

    def rate_everything(self, study_path, store_dir):
        study = load_study(study_path)
        store_dir.mkdir(parents=True, exist_ok=True)
        store = RatingsStore(store_dir / "ratings.log")
        for ballot in study.ballots:
            answers = {}
            for slot in range(len(ballot.statements)):
                decoy = ballot.hidden_assignment[slot].is_decoy
                for dim in study.design.dimensions:
                    yes = not (decoy and dim.dim_id == "follows_from_review")
                    answers[(slot, dim.dim_id)] = yes
            store.submit(Rating(ballot.ballot_id, ballot.rater_id, answers),
                         ballot, study.design.dimensions)
        return store

    def test_create_aggregate_compare_disaggregate(self, tmp_path):
        study_path = self.setup_study(tmp_path)
        store_dir = tmp_path / "store"
        self.rate_everything(study_path, store_dir)

        judgments_path = tmp_path / "judgments.jsonl"
        assert run(["study", "aggregate", "--study", str(study_path),
                    "--store", str(store_dir), "--out", str(judgments_path)]) == 0
        judgments = [json.loads(line) for line in judgments_path.read_text().splitlines()]
        assert len(judgments) == 8 * 3 * 3

        comparisons_path = tmp_path / "comparisons.csv"
        assert run(["study", "compare", "--study", str(study_path), "--store", str(store_dir),
                    "--method-a", "method_alpha", "--method-b", "method_beta",
                    "--out", str(comparisons_path)]) == 0
        with open(comparisons_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["dimension"] for r in rows} == {
            "is_customer_need", "sufficiently_specific", "follows_from_review",
        }
        follows = next(r for r in rows if r["dimension"] == "follows_from_review")
        assert float(follows["proportion_a"]) < float(follows["proportion_b"])

        table_path = tmp_path / "disaggregation.csv"
        assert run(["study", "disaggregate", "--study", str(study_path),
                    "--store", str(store_dir), "--out", str(table_path)]) == 0
        with open(table_path, newline="") as fh:
            cells = {(r["review_label"], r["method"], r["dimension"]): r
                     for r in csv.DictReader(fh)}
        assert float(cells[("informative", "method_alpha", "follows_from_review")]["mean"]) == 0.0
        assert float(cells[("verbatim", "method_alpha", "follows_from_review")]["mean"]) == 1.0


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_override(self, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 10)
        write_pool(pool, 30)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "seed": 5,
            "dataset": {"ratio": 0.8, "neg_count": 3},
        }))
        out = tmp_path / "from_config"
        assert run(["--config", str(config), "dataset", "build",
                    "--positives", str(pairs), "--negatives-pool", str(pool),
                    "--out-dir", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5
        assert manifest["counts"]["train_negatives"] == 3
        assert manifest["counts"]["train_positives"] == 8

        out2 = tmp_path / "flag_override"
        assert run(["--config", str(config), "dataset", "build",
                    "--positives", str(pairs), "--negatives-pool", str(pool),
                    "--neg-count", "6", "--out-dir", str(out2)]) == 0
        manifest2 = json.loads((out2 / "manifest.json").read_text())
        assert manifest2["counts"]["train_negatives"] == 6
        assert manifest2["seed"] == 5

    def test_project_root_anchors_relative_outputs(self, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        pool = tmp_path / "pool.jsonl"
        write_pairs(pairs, 6)
        write_pool(pool, 20)
        root = tmp_path / "project"
        root.mkdir()
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"project_root": str(root)}))
        assert run(["--config", str(config), "dataset", "build",
                    "--positives", str(pairs), "--negatives-pool", str(pool),
                    "--neg-count", "2", "--ratio", "0.5", "--seed", "1",
                    "--out-dir", "artifacts/ds"]) == 0
        assert (root / "artifacts" / "ds" / "manifest.json").exists()


class TestWinnowCommand:
    def test_worksheet_from_text_file(self, tmp_path):
        statements = tmp_path / "statements.txt"
        statements.write_text(
            "easy to apply the stain\nstain is easy to apply\ndries very fast\n"
        )
        out = tmp_path / "worksheet.csv"
        assert run(["winnow", "suggest", "--statements", str(statements),
                    "--threshold", "0.6", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        assert len({r["group_id"] for r in rows}) == 2
