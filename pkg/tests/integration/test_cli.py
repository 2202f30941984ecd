"""Integration tests for the command-line interface"""

import json
import shutil
import time

import numpy as np
import pytest
from click.testing import CliRunner

import src.cli.main as main
from src.cli.main import cli


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def inputs(fixture_dir, temp_dir):
    """Copies of the greeting fixture files"""
    for name in ("plan.json", "catalog.json", "embeddings.txt"):
        shutil.copy(fixture_dir / name, temp_dir / name)
    return temp_dir


@pytest.fixture
def long_inputs(temp_dir):
    """A 50-word utterance over 19 s with six expressions, six motions and a cross-channel conflict"""
    words = [f"w{i}" for i in range(50)]
    actions = [f"act{j}" for j in range(12)]
    (temp_dir / "plan.json").write_text(json.dumps({
        "speech_text": " ".join(words),
        "expressions": [f"<{a}>" for a in actions[:6]],
        "motions": [f"<{a}>" for a in actions[6:]],
    }))
    entries = {}
    for j in range(6):
        entries[f"<act{j}>"] = {"duration_s": 0.6 + 0.15 * j, "channel": "expression"}
        entries[f"<act{j + 6}>"] = {"duration_s": 0.5 + 0.2 * j, "channel": "motion"}
    (temp_dir / "catalog.json").write_text(json.dumps({"actions": entries, "conflicts": [["<act0>", "<act6>"]]}))
    (temp_dir / "lexicon.json").write_text(json.dumps({w: 0.38 for w in words}))

    rng = np.random.default_rng(5)
    lines = [f"{len(words) + len(actions)} 16"]
    for token in words + actions:
        lines.append(token + " " + " ".join(f"{v:.6f}" for v in rng.normal(size=16)))
    (temp_dir / "embeddings.txt").write_text("\n".join(lines) + "\n")
    return temp_dir


def _align_args(inputs, *extra):
    return [
        "align",
        "--plan", str(inputs / "plan.json"),
        "--catalog", str(inputs / "catalog.json"),
        "--embeddings", str(inputs / "embeddings.txt"),
        *extra,
    ]


def _error_line(output):
    """Last JSON object printed by a failing command"""
    for line in reversed(output.strip().splitlines()):
        if line.startswith("{"):
            return json.loads(line)
    raise AssertionError(f"no error line in {output!r}")


class TestAlignCommand:
    """Test the align subcommand"""

    def test_fixture_schedule(self, runner, inputs):
        """Test the greeting aligns <hello> with 'happy'"""
        out = inputs / "schedule.json"
        result = runner.invoke(cli, _align_args(inputs, "--out", str(out)))
        assert result.exit_code == 0, result.output

        data = json.loads(out.read_text())
        starts = {a["id"]: a["start_s"] for a in data["actions"]}
        assert starts == {"<bless>": 0.15, "<hello>": 0.0, "<nod>": 1.2}
        hello = next(a for a in data["actions"] if a["id"] == "<hello>")
        assert hello["matched_word"] == "happy"
        assert data["metadata"]["theta"] == 0.7
        assert data["metadata"]["delta"] == 0.3
        assert data["horizon"] == pytest.approx(2.6)

    def test_greedy_is_not_better(self, runner, inputs):
        """Test --temporal-plan=off never beats the optimal run"""
        optimal, greedy = inputs / "optimal.json", inputs / "greedy.json"
        assert runner.invoke(cli, _align_args(inputs, "--out", str(optimal))).exit_code == 0
        result = runner.invoke(cli, _align_args(inputs, "--temporal-plan=off", "--out", str(greedy)))
        assert result.exit_code == 0, result.output

        best = json.loads(optimal.read_text())
        earliest = json.loads(greedy.read_text())
        assert earliest["objective"] <= best["objective"]
        assert earliest["metadata"]["solver"] == "greedy"

    def test_modal_sync_off(self, runner, inputs):
        """Test the window ablation still produces a schedule"""
        out = inputs / "schedule.json"
        result = runner.invoke(cli, _align_args(inputs, "--modal-sync", "off", "--out", str(out)))
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["metadata"]["modal_sync"] is False
        assert data["actions"][0]["start_s"] == 0.0

    def test_gantt_and_events(self, runner, inputs):
        """Test Gantt and event outputs are written"""
        gantt, events = inputs / "chart.txt", inputs / "events.json"
        result = runner.invoke(cli, _align_args(
            inputs, "--out", str(inputs / "s.json"), "--gantt-out", str(gantt), "--events-out", str(events),
        ))
        assert result.exit_code == 0, result.output
        assert gantt.read_text().splitlines()[1].startswith("speech")
        assert len(json.loads(events.read_text())) == 18

    def test_gantt_format(self, runner, inputs):
        """Test --format gantt writes the chart as primary output"""
        out = inputs / "chart.txt"
        result = runner.invoke(cli, _align_args(inputs, "--format", "gantt", "--width", "60", "--out", str(out)))
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert [line.split("|")[0].strip() for line in lines] == ["time", "speech", "expression", "motion"]

    def test_full_size_utterance_is_fast(self, runner, long_inputs):
        """Test a 50-word, 12-action align run finishes within 500 ms"""
        out = long_inputs / "schedule.json"
        args = _align_args(long_inputs, "--lexicon", str(long_inputs / "lexicon.json"),
                           "--theta", "0.3", "--out", str(out))
        durations = []
        for _ in range(3):
            started = time.perf_counter()
            result = runner.invoke(cli, args)
            durations.append(time.perf_counter() - started)
            assert result.exit_code == 0, result.output

        data = json.loads(out.read_text())
        assert len(data["actions"]) == 12
        assert data["horizon"] == pytest.approx(20.0)
        assert sorted(durations)[1] < 0.5

    def test_missing_catalog(self, runner, inputs):
        """Test a missing file exits 2 without writing output"""
        (inputs / "catalog.json").unlink()
        out = inputs / "schedule.json"
        result = runner.invoke(cli, _align_args(inputs, "--out", str(out)))
        assert result.exit_code == 2
        assert _error_line(result.output)["error"] == "MissingInput"
        assert not out.exists()

    def test_malformed_plan(self, runner, inputs):
        """Test malformed JSON exits 3"""
        (inputs / "plan.json").write_text('{"speech_text": ')
        result = runner.invoke(cli, _align_args(inputs))
        assert result.exit_code == 3
        assert _error_line(result.output)["error"] == "ParseError"

    def test_invalid_plan(self, runner, inputs):
        """Test plan invariant violations exit 4"""
        (inputs / "plan.json").write_text('{"speech_text": "hi", "motions": ["nod"]}')
        result = runner.invoke(cli, _align_args(inputs))
        assert result.exit_code == 4
        assert _error_line(result.output)["field"] == "motions[0]"

    def test_empty_speech(self, runner, inputs):
        """Test speech without words exits 5"""
        (inputs / "plan.json").write_text('{"speech_text": "!!!"}')
        assert runner.invoke(cli, _align_args(inputs)).exit_code == 5

    def test_unexecutable_plan(self, runner, inputs):
        """Test uncatalogued actions exit 6"""
        (inputs / "plan.json").write_text('{"speech_text": "hi", "motions": ["<dance>"]}')
        result = runner.invoke(cli, _align_args(inputs))
        assert result.exit_code == 6
        assert _error_line(result.output)["issues"] == ["<dance>: unknown action"]

    def test_infeasible(self, runner, inputs):
        """Test an overfull merged chain exits 7"""
        result = runner.invoke(cli, _align_args(inputs, "--channel-mode", "merged"))
        assert result.exit_code == 7
        assert _error_line(result.output)["action_id"] == "<nod>"

    @pytest.mark.parametrize("flags", [["--theta", "1.5"], ["--tick", "0.5"], ["--delta", "0"], ["--width", "10"]])
    def test_out_of_range_flags(self, runner, inputs, flags):
        """Test numeric overrides outside their ranges exit 4"""
        result = runner.invoke(cli, _align_args(inputs, *flags))
        assert result.exit_code == 4
        assert _error_line(result.output)["error"] == "ConfigInvalid"


class TestOracleCheckCommand:
    """Test the oracle-check subcommand"""

    def test_zero_instances(self, runner):
        """Test an empty run passes vacuously"""
        assert runner.invoke(cli, ["oracle-check", "--count", "0"]).exit_code == 0

    def test_seeded_run(self, runner, temp_dir):
        """Test a short seeded run agrees"""
        out = temp_dir / "counterexample.json"
        result = runner.invoke(cli, ["oracle-check", "--count", "25", "--seed", "42", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert not out.exists()

    def test_corrupted_solver(self, runner, temp_dir, monkeypatch):
        """Test a wrong solver is caught with a counterexample file"""
        real_solve = main.solve

        def off_by_one(*args):
            schedule = real_solve(*args)
            return schedule.model_copy(update={"objective": schedule.objective + 1.0})

        monkeypatch.setattr(main, "solve", off_by_one)
        out = temp_dir / "counterexample.json"
        result = runner.invoke(cli, ["oracle-check", "--count", "50", "--out", str(out)])
        assert result.exit_code == 1
        dumped = json.loads(out.read_text())
        assert dumped["seed"] == 42
        assert "plan" in dumped["instance"]

    @pytest.mark.slow
    def test_full_run(self, runner, temp_dir):
        """Test 1000 seeded instances agree"""
        result = runner.invoke(cli, ["oracle-check", "--count", "1000", "--seed", "42",
                                     "--out", str(temp_dir / "cx.json")])
        assert result.exit_code == 0, result.output


class TestDedupCommand:
    """Test the dedup subcommand"""

    def test_duplicate_lines(self, runner, temp_dir):
        """Test [A, A, B] keeps [0, 2] at rate 0.3333"""
        corpus = temp_dir / "corpus.txt"
        corpus.write_text(
            "the quick brown fox jumps over the lazy dog near the river bank\n"
            "the quick brown fox jumps over the lazy dog near the river bank\n"
            "robots greet visitors with a friendly wave and a warm smile today\n"
        )
        result = runner.invoke(cli, ["dedup", str(corpus)])
        assert result.exit_code == 0, result.output
        assert "[0, 2]" in result.output
        assert "duplication_rate=0.3333" in result.output

    def test_empty_corpus(self, runner, temp_dir):
        """Test an empty corpus reports rate 0"""
        corpus = temp_dir / "corpus.txt"
        corpus.write_text("")
        result = runner.invoke(cli, ["dedup", str(corpus)])
        assert result.exit_code == 0
        assert "[]" in result.output
        assert "duplication_rate=0.0000" in result.output

    def test_output_file(self, runner, temp_dir):
        """Test retained indices can go to a file"""
        corpus = temp_dir / "corpus.json"
        corpus.write_text(json.dumps(["same text", "same text"]))
        out = temp_dir / "kept.json"
        result = runner.invoke(cli, ["dedup", str(corpus), "--out", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text()) == [0]

    def test_bad_corpus(self, runner, temp_dir):
        """Test malformed JSON corpora exit 3"""
        corpus = temp_dir / "corpus.json"
        corpus.write_text("[1, 2")
        assert runner.invoke(cli, ["dedup", str(corpus)]).exit_code == 3


class TestQuantizeCommand:
    """Test the quantize subcommand"""

    def test_single_value(self, runner, temp_dir):
        """Test 0.26 at step 0.1 prints 0.3"""
        values = temp_dir / "w.json"
        values.write_text("[0.26]")
        out = temp_dir / "q.json"
        result = runner.invoke(cli, ["quantize", str(values), "--delta", "0.1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["values"] == [0.3]
        assert data["codes"] == [3]

    def test_absmax_default(self, runner, temp_dir):
        """Test the step defaults to absmax / 7"""
        values = temp_dir / "w.txt"
        values.write_text("-14 7\n0\n")
        out = temp_dir / "q.json"
        result = runner.invoke(cli, ["quantize", str(values), "--out", str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data["delta"] == 2.0
        assert data["codes"] == [-7, 4, 0]

    def test_bad_number(self, runner, temp_dir):
        """Test unparsable values exit 3"""
        values = temp_dir / "w.txt"
        values.write_text("0.1 abc\n")
        assert runner.invoke(cli, ["quantize", str(values)]).exit_code == 3

    def test_empty_values(self, runner, temp_dir):
        """Test empty inputs exit 9"""
        values = temp_dir / "w.txt"
        values.write_text("")
        assert runner.invoke(cli, ["quantize", str(values)]).exit_code == 9

    def test_bad_delta(self, runner, temp_dir):
        """Test non-positive steps exit 4"""
        values = temp_dir / "w.txt"
        values.write_text("1.0")
        assert runner.invoke(cli, ["quantize", str(values), "--delta", "-1"]).exit_code == 4


class TestValidateAndConfig:
    """Test the validate and config subcommands"""

    def test_valid_plan(self, runner, inputs):
        """Test the fixture validates"""
        result = runner.invoke(cli, ["validate", "--plan", str(inputs / "plan.json"),
                                     "--catalog", str(inputs / "catalog.json")])
        assert result.exit_code == 0, result.output

    def test_channel_mismatch(self, runner, inputs):
        """Test wrong channels exit 6"""
        (inputs / "plan.json").write_text('{"speech_text": "hi", "motions": ["<bless>"]}')
        result = runner.invoke(cli, ["validate", "--plan", str(inputs / "plan.json"),
                                     "--catalog", str(inputs / "catalog.json")])
        assert result.exit_code == 6

    def test_config(self, runner):
        """Test defaults are listed"""
        result = runner.invoke(cli, ["config"])
        assert result.exit_code == 0
        assert "Alignment window" in result.output
