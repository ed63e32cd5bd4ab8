import json
import subprocess
import sys

import pytest

from hkbounds import (
    BoundName,
    Configuration,
    EventKind,
    ScalarMode,
    SweepSpec,
    consensus_exact_1d,
    emit_csv,
    emit_jsonl,
    run_figure_sweep,
)
from hkbounds.cli import main
from hkbounds.cli import _parse_eps_grid
from hkbounds.sweep import validate_spec


def spec_for(**kw):
    base = dict(
        n_list=(2,),
        d=1,
        eps_grid=(0.3, 0.5),
        trials=2000,
        master_seed=7,
        events=(EventKind.CONSENSUS,),
        bounds=(BoundName.CONSENSUS_EXACT_1D,),
    )
    base.update(kw)
    return SweepSpec(**base)


class TestEpsGridParsing:
    def test_range_form(self):
        grid = _parse_eps_grid("0.05:0.95:0.05")
        assert len(grid) == 19
        assert grid[0] == 0.05 and grid[-1] == 0.95
        assert all(b > a for a, b in zip(grid, grid[1:]))

    def test_list_form(self):
        assert _parse_eps_grid("0.1,0.2,0.7") == (0.1, 0.2, 0.7)

    def test_malformed(self):
        with pytest.raises(ValueError):
            _parse_eps_grid("0.1:0.9")
        with pytest.raises(ValueError):
            _parse_eps_grid("0.9:0.1:0.1")


class TestSweep:
    def test_two_agent_panel_matches_exact_curve(self):
        grid = _parse_eps_grid("0.05:0.95:0.05")
        spec = spec_for(eps_grid=grid, trials=3000)
        rows = run_figure_sweep(spec)
        assert len(rows) == 19 * 2
        mc = {r.eps: r for r in rows if r.kind == "mc"}
        bound = {r.eps: r for r in rows if r.kind == "bound"}
        assert set(mc) == set(bound) == set(grid)
        misses = sum(
            abs(mc[e].value - bound[e].value) > 3 * (mc[e].stderr or 1e-9) for e in grid
        )
        assert misses <= 2  # 3-sigma two-sided across 19 cells

    def test_union_dominates_members_at_matching_seeds(self):
        spec = spec_for(
            n_list=(10,),
            eps_grid=(0.3, 0.4, 0.5),
            trials=4000,
            events=(
                EventKind.EPS_TRIVIAL0,
                EventKind.STAR_STAR0,
                EventKind.EPS_TRIVIAL_OR_STAR_STAR0,
            ),
            bounds=(),
        )
        rows = run_figure_sweep(spec)
        for eps in spec.eps_grid:
            by_name = {r.name: r.value for r in rows if r.eps == eps}
            union = by_name["eps_trivial_or_star_star0"]
            assert union >= by_name["eps_trivial0"]
            assert union >= by_name["star_star0"]

    def test_row_ordering_is_spec_order(self):
        spec = spec_for(
            n_list=(3, 2),
            eps_grid=(0.2, 0.6),
            events=(EventKind.CONNECTED0,),
            bounds=(BoundName.EPS_TRIVIAL_1D,),
            trials=50,
        )
        rows = run_figure_sweep(spec)
        key = [(r.n, r.eps, r.kind) for r in rows]
        assert key == [
            (3, 0.2, "mc"), (3, 0.2, "bound"), (3, 0.6, "mc"), (3, 0.6, "bound"),
            (2, 0.2, "mc"), (2, 0.2, "bound"), (2, 0.6, "mc"), (2, 0.6, "bound"),
        ]

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            validate_spec(spec_for(eps_grid=()))

    def test_invalid_event_names_offending_cell(self):
        bad = spec_for(n_list=(2, 3), events=(EventKind.STAR0,), bounds=())
        with pytest.raises(ValueError, match=r"n=2.*star0"):
            validate_spec(bad)

    def test_invalid_bound_names_offending_cell(self):
        bad = spec_for(n_list=(10,), events=(), bounds=(BoundName.CONSENSUS_EXACT_1D,))
        with pytest.raises(ValueError, match=r"n=10.*consensus_exact_1d"):
            validate_spec(bad)
        flat = spec_for(d=2, events=(), bounds=(BoundName.EPS_TRIVIAL_1D,))
        with pytest.raises(ValueError, match=r"d=2.*eps_trivial_1d"):
            validate_spec(flat)


class TestEmitters:
    def test_csv_layout(self, tmp_path):
        path = tmp_path / "table.csv"
        rows = run_figure_sweep(
            spec_for(n_list=(4,), eps_grid=(0.4,), events=(), bounds=(BoundName.CONSENSUS_EXACT_1D,), trials=1)
        )
        emit_csv(rows, str(path))
        text = path.read_text()
        lines = text.split("\n")
        assert lines[0] == "kind,name,n,d,eps,value,stderr,trials,seed,branch"
        assert len(lines) == 3 and lines[2] == ""  # header + row + final newline
        import csv as csvmod

        cells = next(csvmod.reader([lines[1]]))
        assert cells[0] == "bound"
        assert cells[1] == "consensus_exact_1d"
        assert cells[9] == "eps in [1/3,1/2)"
        assert float(cells[5]) == consensus_exact_1d(4, 0.4).value  # 17 digits round-trip

    def test_csv_reruns_byte_identical(self, tmp_path):
        spec = spec_for(trials=500)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_figure_sweep(spec), str(a))
        emit_csv(run_figure_sweep(spec), str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "table.jsonl"
        rows = run_figure_sweep(spec_for(trials=100))
        emit_jsonl(rows, str(path))
        parsed = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(parsed) == len(rows)
        assert parsed[0]["kind"] == "mc"
        assert parsed[0]["value"] == rows[0].value

    def test_empty_table_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([], str(tmp_path / "x.csv"))

    def test_unwritable_path_leaves_no_partial_file(self, tmp_path):
        rows = run_figure_sweep(spec_for(trials=10))
        target = tmp_path / "missing" / "out.csv"
        with pytest.raises(OSError):
            emit_csv(rows, str(target))
        assert not target.exists()


class TestCli:
    def test_bounds_command(self, capsys):
        code = main(["-q", "bounds", "--bound", "eps_trivial_1d,half_eps_ball_1d",
                     "--n", "3", "--eps", "0.5"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[0] == "name,n,d,eps,branch,value"
        assert len(lines) == 3

    def test_estimate_command_json(self, capsys):
        code = main(["-q", "estimate", "--event", "eps_trivial0", "--n", "2",
                     "--eps", "0.5", "--trials", "2000", "--seed", "3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["event"] == "eps_trivial0"
        assert payload["trials"] == 2000
        assert payload["successes"] == round(payload["p_hat"] * 2000)
        assert 0.6 < payload["p_hat"] < 0.9

    def test_estimate_command_csv(self, capsys):
        code = main(["-q", "estimate", "--event", "connected0", "--n", "3",
                     "--eps", "0.4", "--trials", "500", "--format", "csv"])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0].startswith("event,n,d,eps,trials")
        assert lines[1].startswith("connected0,3,1,")

    def test_estimate_cap_exhaustion_exit_code(self, capsys):
        code = main(["-q", "estimate", "--event", "consensus", "--n", "6",
                     "--eps", "0.35", "--trials", "1000", "--cap", "1"])
        assert code == 4
        payload = json.loads(capsys.readouterr().out)
        assert payload["cap_reached"] > 0

    def test_simulate_sampled_and_dump(self, tmp_path, capsys):
        dump = tmp_path / "states.jsonl"
        code = main(["-q", "simulate", "--n", "4", "--eps", "0.3", "--seed", "5",
                     "--dump", str(dump)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["outcome"] in ("consensus", "fragmented")
        states = [Configuration.loads(line) for line in dump.read_text().splitlines()]
        assert len(states) == payload["history_len"]
        assert states[-1].as_json() == payload["final"]

    def test_simulate_from_input_file_rational(self, tmp_path, capsys):
        cfg = Configuration(((-1,), (0,), (1,), (2,), (2,)), 1, ScalarMode.EXACT_RATIONAL)
        path = tmp_path / "cfg.json"
        path.write_text(cfg.dumps())
        code = main(["-q", "simulate", "--input", str(path), "--mode", "rational"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["outcome"] == "fragmented"
        assert payload["steps"] == 1
        assert payload["cluster_count"] == 2

    def test_simulate_missing_args(self, capsys):
        assert main(["-q", "simulate", "--n", "4"]) == 2

    def test_counterexample_command(self, tmp_path):
        out = tmp_path / "cex.json"
        code = main(["-q", "counterexample", "--n", "7", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["connected_t0"] is True
        assert payload["disconnected_t1"] is True
        cfg = Configuration.from_json(payload["config"])
        assert cfg.n == 7
        assert main(["-q", "counterexample", "--n", "4"]) == 2

    def test_unknown_event_is_validation_error(self):
        assert main(["-q", "estimate", "--event", "nope", "--n", "2", "--eps", "0.5"]) == 2

    def test_figure_determinism_across_runs_and_workers(self, tmp_path):
        args = ["-q", "figure", "--n", "2,10", "--eps-grid", "0.2:0.6:0.2",
                "--trials", "1500", "--seed", "11",
                "--event", "consensus,connected0,eps_trivial0",
                "--bound", "eps_trivial_1d,half_eps_ball_1d", "--no-plot"]
        a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert main(args + ["--out", str(c), "--workers", "3"]) == 0
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_figure_renders_panels_by_default(self, tmp_path):
        out = tmp_path / "fig.csv"
        code = main(["-q", "figure", "--n", "2", "--eps-grid", "0.3,0.6",
                     "--trials", "200", "--seed", "1",
                     "--event", "connected0", "--bound", "eps_trivial_1d",
                     "--out", str(out)])
        assert code == 0
        panel = tmp_path / "fig_n2.png"
        assert panel.exists() and panel.stat().st_size > 1000

    def test_figure_config_file_with_flag_override(self, tmp_path):
        config = {
            "n_list": [2],
            "eps_grid": "0.3,0.5",
            "trials": 300,
            "master_seed": 9,
            "events": ["connected0"],
            "bounds": [],
            "plot": False,
        }
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(json.dumps(config))
        out = tmp_path / "t.csv"
        code = main(["-q", "figure", "--config", str(cfg_path), "--out", str(out),
                     "--trials", "100"])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 1 + 2  # header + 2 cells
        assert ",100," in lines[1]  # flag overrode the file's trial count

    def test_figure_invalid_cell_fails_before_output(self, tmp_path):
        out = tmp_path / "x.csv"
        code = main(["-q", "figure", "--n", "3", "--eps-grid", "0.3,0.5",
                     "--trials", "100", "--event", "star0", "--out", str(out), "--no-plot"])
        assert code == 2
        assert not out.exists()

    def test_figure_unwritable_output_is_io_error(self, tmp_path):
        code = main(["-q", "figure", "--n", "2", "--eps-grid", "0.3",
                     "--trials", "50", "--event", "connected0",
                     "--out", str(tmp_path / "no" / "dir" / "x.csv"), "--no-plot"])
        assert code == 3

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "hkbounds", "-q", "bounds", "--bound",
             "cube_ball_lower", "--n", "2", "--d", "2", "--eps", "0.5"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("name,n,d,eps,branch,value")
