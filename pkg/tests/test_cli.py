import json
import sys

import numpy as np
import pytest

from condguide import cli
from condguide.io_formats import (
    read_cggm,
    read_image,
    read_mask_png,
    read_pose_file,
    write_cgfl,
    write_cgfs,
    write_image,
    write_pfm,
)
from condguide import (
    DilationParams,
    FlowField,
    Raster,
    flow_guidance_inference,
    frame_character_mask,
    frame_dilation_maps,
)

from test_pose import keypoints18, pose_json


@pytest.fixture
def pose_file(tmp_path):
    payload = pose_json(
        [
            {
                "characters": [
                    {"id": 0, "keypoints": keypoints18(10.0, 10.0)},
                    {"id": 1, "keypoints": keypoints18(40.0, 12.0)},
                ]
            }
            for _ in range(3)
        ],
        width=64,
        height=48,
    )
    p = tmp_path / "clip.json"
    p.write_text(payload)
    return p


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestWindowsCommand:
    def test_plan_json(self, capsys):
        assert run_cli("windows", "--total", 32, "--window", 16, "--stride", 8) == 0
        obj = json.loads(capsys.readouterr().out)
        assert [w[0] for w in obj["windows"]] == [0, 8, 16]
        assert obj["coverage"][0] == 1 and obj["coverage"][8] == 2

    def test_default_parameters_match_paper_scheme(self, capsys):
        assert run_cli("windows", "--total", 32) == 0
        obj = json.loads(capsys.readouterr().out)
        assert [w[0] for w in obj["windows"]] == [0, 8, 16]

    def test_bad_parameters_usage_error(self, capsys):
        assert run_cli("windows", "--total", 0) == 1


class TestConfigPrecedence:
    @pytest.mark.parametrize("fmt", ["json", "toml"])
    def test_config_overrides_default(self, tmp_path, capsys, fmt):
        cfg = tmp_path / f"c.{fmt}"
        if fmt == "json":
            cfg.write_text(json.dumps({"windows": {"window": 8, "stride": 4}}))
        else:
            cfg.write_text("[windows]\nwindow = 8\nstride = 4\n")
        assert run_cli("windows", "--total", 16, "--config", cfg) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["window"] == 8 and obj["stride"] == 4
        assert [w[0] for w in obj["windows"]] == [0, 4, 8]

    def test_flag_overrides_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"windows": {"window": 8, "stride": 4}}))
        assert run_cli("windows", "--total", 16, "--config", cfg, "--window", 16, "--stride", 8) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["window"] == 16
        assert [w[0] for w in obj["windows"]] == [0]

    def test_dilate_param_precedence(self, tmp_path, pose_file):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dilate": {"rho_floor": 6.0}}))
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert run_cli("dilate", "--pose", pose_file, "--out", out1, "--config", cfg) == 0
        assert run_cli("dilate", "--pose", pose_file, "--out", out2,
                       "--config", cfg, "--rho-floor", "3.0") == 0
        r1 = json.loads((out1 / "run_report.json").read_text())
        r2 = json.loads((out2 / "run_report.json").read_text())
        assert r1["params"]["rho_floor_px"] == 6.0
        assert r2["params"]["rho_floor_px"] == 3.0

    @pytest.mark.parametrize(
        "flag,key,report_key,default,cfg_value,flag_value",
        [
            ("--conf-threshold", "conf_threshold", "confidence_threshold", 0.3, 0.5, 0.7),
            ("--thickness", "thickness", "line_thickness_512", 4.0, 6.0, 2.0),
            ("--joint-radius", "joint_radius", "joint_radius_512", 4.0, 5.0, 1.0),
            ("--rho-relative", "rho_relative", "rho_relative", 0.06, 0.1, 0.02),
            ("--rho-floor", "rho_floor", "rho_floor_px", 3.0, 6.0, 1.0),
            ("--jobs", "jobs", "jobs", 1, 2, 3),
        ],
    )
    def test_every_dilate_parameter_precedence(
        self, tmp_path, pose_file, monkeypatch,
        flag, key, report_key, default, cfg_value, flag_value,
    ):
        monkeypatch.delenv("CONDGUIDE_JOBS", raising=False)

        def report_for(*extra):
            out = tmp_path / f"o{len(list(tmp_path.iterdir()))}"
            assert run_cli("dilate", "--pose", pose_file, "--out", out, *extra) == 0
            return json.loads((out / "run_report.json").read_text())["params"]

        assert report_for()[report_key] == default
        cfg = tmp_path / f"{key}.json"
        cfg.write_text(json.dumps({"dilate": {key: cfg_value}}))
        assert report_for("--config", cfg)[report_key] == cfg_value
        assert report_for("--config", cfg, flag, flag_value)[report_key] == flag_value


class TestExitCodes:
    def test_missing_pose_file_exit_2_names_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.json"
        code = run_cli("dilate", "--pose", missing, "--out", tmp_path / "o")
        assert code == 2
        assert "nope.json" in capsys.readouterr().err

    def test_depthorder_infer_without_reference_exit_1(self, tmp_path, pose_file):
        code = run_cli("depthorder", "--mode", "infer",
                       "--pose", pose_file, "--out", tmp_path / "o")
        assert code == 1

    def test_data_error_exit_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(pose_json([{"characters": [
            {"id": 0, "keypoints": keypoints18()},
            {"id": 0, "keypoints": keypoints18(30.0)},
        ]}]))
        assert run_cli("dilate", "--pose", bad, "--out", tmp_path / "o") == 3

    def test_no_subcommand_exit_1(self):
        assert run_cli() == 1

    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        assert "dilate" in capsys.readouterr().out


class TestDilateCommand:
    def test_masks_match_library(self, tmp_path, pose_file):
        out = tmp_path / "o"
        assert run_cli("dilate", "--pose", pose_file, "--out", out) == 0
        seq = read_pose_file(pose_file)
        maps = frame_dilation_maps(seq.frames[0], seq.topology, DilationParams())
        for char, want in zip(seq.frames[0].characters, maps):
            got = read_mask_png(out / f"clip_00000_{char.character_id}.png")
            assert np.array_equal(got.data, want.data)
        report = json.loads((out / "run_report.json").read_text())
        assert len(report["outputs"]) == 3 * 2
        assert "timestamp" in report

    def test_jobs_flag_same_outputs(self, tmp_path, pose_file):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert run_cli("dilate", "--pose", pose_file, "--out", out1) == 0
        assert run_cli("dilate", "--pose", pose_file, "--out", out2, "--jobs", 4) == 0
        for name in sorted(p.name for p in out1.glob("*.png")):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_jobs_env_default(self, tmp_path, pose_file, monkeypatch):
        monkeypatch.setenv("CONDGUIDE_JOBS", "3")
        out = tmp_path / "o"
        assert run_cli("dilate", "--pose", pose_file, "--out", out) == 0
        report = json.loads((out / "run_report.json").read_text())
        assert report["params"]["jobs"] == 3


class TestEmptyFrames:
    @pytest.fixture
    def sparse_pose_file(self, tmp_path):
        frames = [
            {"characters": [{"id": 0, "keypoints": keypoints18()}]},
            {"characters": []},  # character left the frame
            {"characters": [{"id": 0, "keypoints": keypoints18(20.0)}]},
        ]
        p = tmp_path / "sparse.json"
        p.write_text(pose_json(frames, width=64, height=48))
        return p

    def test_dilate_skips_empty_frames(self, tmp_path, sparse_pose_file):
        out = tmp_path / "o"
        assert run_cli("dilate", "--pose", sparse_pose_file, "--out", out) == 0
        names = sorted(p.name for p in out.glob("*.png"))
        assert names == ["sparse_00000_0.png", "sparse_00002_0.png"]

    def test_flowmap_infer_empty_frame_all_background(self, tmp_path, sparse_pose_file):
        out = tmp_path / "o"
        assert run_cli("flowmap", "--mode", "infer",
                       "--pose", sparse_pose_file, "--out", out) == 0
        gmap = read_cggm(out / "sparse_00001.cggm")
        assert not gmap.mask.data.any()
        assert not gmap.values.data.any()

    def test_depthorder_train_empty_frame_zero_map(self, tmp_path, sparse_pose_file):
        from condguide.io_formats import read_pfm, write_pfm

        ddir = tmp_path / "depth"
        ddir.mkdir()
        for i in range(3):
            write_pfm(Raster(np.full((48, 64), 0.5, dtype=np.float32)),
                      ddir / f"{i:05}.pfm")
        out = tmp_path / "o"
        assert run_cli("depthorder", "--mode", "train",
                       "--pose", sparse_pose_file, "--out", out, "--depth", ddir) == 0
        assert not read_pfm(out / "sparse_00001.pfm").data.any()
        sidecar = json.loads((out / "sparse_ranks.json").read_text())
        assert sidecar["frames"][1]["ranks"] == []


class TestFlowmapCommand:
    def test_infer_mode_matches_library(self, tmp_path, pose_file):
        out = tmp_path / "o"
        assert run_cli("flowmap", "--mode", "infer", "--pose", pose_file, "--out", out) == 0
        seq = read_pose_file(pose_file)
        want = flow_guidance_inference(
            frame_character_mask(seq.frames[1], seq.topology, DilationParams())
        )
        got = read_cggm(out / "clip_00001.cggm")
        assert np.array_equal(got.values.data, want.values.data)
        assert np.array_equal(got.mask.data, want.mask.data)

    def test_train_mode_from_frames(self, tmp_path, pose_file):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        rng = np.random.default_rng(0)
        base = rng.random((48, 64, 3)).astype(np.float32)
        for i in range(3):
            write_image(Raster(np.roll(base, i, axis=1)), frames_dir / f"{i:05}.png")
        out = tmp_path / "o"
        assert run_cli(
            "flowmap", "--mode", "train", "--pose", pose_file,
            "--out", out, "--frames", frames_dir, "--block", 8, "--search", 2,
        ) == 0
        got = read_cggm(out / "clip_00001.cggm")
        assert got.values.data.shape == (48, 64, 2)
        # rolled image moves content right by 1 per frame: interior background
        # blocks must recover flow (1, 0)
        interior_bg = ~got.mask.boolean()
        interior_bg[:, :8] = False
        interior_bg[:, -8:] = False
        assert (got.values.data[interior_bg][:, 0] == 1.0).all()
        assert (got.values.data[interior_bg][:, 1] == 0.0).all()

    def test_train_needs_exactly_one_source(self, tmp_path, pose_file):
        assert run_cli("flowmap", "--mode", "train", "--pose", pose_file,
                       "--out", tmp_path / "o") == 1

    def test_train_from_cgfl_files(self, tmp_path, pose_file):
        flow_dir = tmp_path / "flows"
        flow_dir.mkdir()
        for i in range(2):
            write_cgfl(
                FlowField(np.full((48, 64, 2), float(i), dtype=np.float32)),
                flow_dir / f"{i:05}.cgfl",
            )
        out = tmp_path / "o"
        assert run_cli("flowmap", "--mode", "train", "--pose", pose_file,
                       "--out", out, "--flow", flow_dir) == 0
        got = read_cggm(out / "clip_00002.cggm")
        background = ~got.mask.boolean()
        assert (got.values.data[background] == 1.0).all()  # flow file value 1.0


class TestDepthorderCommand:
    def make_depth(self, tmp_path, n=3):
        ddir = tmp_path / "depth"
        ddir.mkdir()
        for i in range(n):
            d = np.full((48, 64), 0.2, dtype=np.float32)
            d[:, :32] = 0.9
            write_pfm(Raster(d), ddir / f"{i:05}.pfm")
        return ddir

    def test_train_outputs(self, tmp_path, pose_file):
        ddir = self.make_depth(tmp_path)
        out = tmp_path / "o"
        assert run_cli("depthorder", "--mode", "train", "--pose", pose_file,
                       "--out", out, "--depth", ddir) == 0
        from condguide.io_formats import read_pfm

        m = read_pfm(out / "clip_00000.pfm")
        assert set(np.unique(m.data).tolist()) <= {0.0, 0.5, 1.0}
        sidecar = json.loads((out / "clip_ranks.json").read_text())
        assert len(sidecar["frames"]) == 3
        ranks0 = sidecar["frames"][0]["ranks"]
        assert [r["character_id"] for r in ranks0] == [0, 1]
        assert ranks0[0]["level_value"] == 1.0

    def test_train_with_png16_depth(self, tmp_path, pose_file):
        from condguide.io_formats import read_pfm, write_depth_png16
        from condguide import DepthRaster

        ddir = tmp_path / "depth16"
        ddir.mkdir()
        d = np.full((48, 64), 200.0, dtype=np.float32)
        d[:, :32] = 900.0
        for i in range(3):
            write_depth_png16(DepthRaster(d), ddir / f"{i:05}.png", scale=1.0)
        out = tmp_path / "o"
        assert run_cli(
            "depthorder", "--mode", "train", "--pose", pose_file, "--out", out,
            "--depth", ddir, "--depth-format", "png16", "--depth-scale", "1.0",
        ) == 0
        m = read_pfm(out / "clip_00000.pfm")
        assert set(np.unique(m.data).tolist()) <= {0.0, 0.5, 1.0}

    def test_infer_with_reference(self, tmp_path, pose_file):
        ddir = self.make_depth(tmp_path, 1)
        out = tmp_path / "o"
        assert run_cli(
            "depthorder", "--mode", "infer", "--pose", pose_file, "--out", out,
            "--ref-pose", pose_file, "--ref-depth", ddir / "00000.pfm",
        ) == 0
        assert (out / "clip_reference_ranks.json").exists()
        assert (out / "clip_00002.pfm").exists()


class TestRefposeCommand:
    def test_reference_map_written(self, tmp_path, pose_file):
        out = tmp_path / "o"
        assert run_cli("refpose", "--pose", pose_file, "--out", out) == 0
        img = read_image(out / "clip_refpose.png")
        assert img.data.shape == (48, 64, 3)
        assert img.data.any()

    def test_all_frames(self, tmp_path, pose_file):
        out = tmp_path / "o"
        assert run_cli("refpose", "--pose", pose_file, "--out", out, "--all") == 0
        assert sorted(p.name for p in out.glob("clip_0*.png")) == [
            "clip_00000.png", "clip_00001.png", "clip_00002.png",
        ]


class TestAnalyzeCommand:
    def test_manifest_to_csv_and_histograms(self, tmp_path, pose_file):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({
            "clips": [{"id": "clipA", "pose": "clip.json"}],
        }))
        out = tmp_path / "o"
        assert run_cli("analyze", "--manifest", manifest, "--out", out) == 0
        lines = (out / "analysis.csv").read_text().strip().split("\n")
        assert lines[0] == "clip_id,flow_mean,char_count_mode,occlusion_mean"
        cells = lines[1].split(",")
        assert cells[0] == "clipA" and cells[1] == "" and cells[2] == "2"
        hists = json.loads((out / "histograms.json").read_text())
        assert hists["occlusion"]["edges"] == [0.05, 0.13, 0.21]
        assert hists["flow_mean"] is None


class TestMetricsCommand:
    def fill_dirs(self, tmp_path, identical=True):
        real, gen = tmp_path / "real", tmp_path / "gen"
        real.mkdir(), gen.mkdir()
        rng = np.random.default_rng(1)
        for i in range(2):
            img = rng.random((24, 24, 3)).astype(np.float32)
            write_image(Raster(img), real / f"{i:05}.png")
            other = img if identical else rng.random((24, 24, 3)).astype(np.float32)
            write_image(Raster(other), gen / f"{i:05}.png")
        return real, gen

    def test_identical_dirs(self, tmp_path, capsys):
        real, gen = self.fill_dirs(tmp_path)
        assert run_cli("metrics", "--real", real, "--gen", gen) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["psnr"] == "inf"
        assert obj["ssim"] == 1.0
        assert obj["l1"] == 0.0
        assert obj["frechet"] is None

    def test_features_pair(self, tmp_path, capsys):
        real, gen = self.fill_dirs(tmp_path)
        rng = np.random.default_rng(2)
        vec = rng.normal(size=(16, 8)).astype(np.float32)
        write_cgfs(vec, tmp_path / "r.cgfs")
        write_cgfs(vec, tmp_path / "g.cgfs")
        assert run_cli("metrics", "--real", real, "--gen", gen,
                       "--features", tmp_path / "r.cgfs", tmp_path / "g.cgfs") == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["frechet"] < 1e-6

    def test_standardize_path(self, tmp_path, capsys):
        real, gen = self.fill_dirs(tmp_path)
        assert run_cli("metrics", "--real", real, "--gen", gen,
                       "--standardize", 16) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["ssim"] == 1.0

    def test_count_mismatch_is_io_error(self, tmp_path):
        real, gen = self.fill_dirs(tmp_path)
        (gen / "00001.png").unlink()
        assert run_cli("metrics", "--real", real, "--gen", gen) == 2


class TestRunCommand:
    def test_subprocess_generator(self, tmp_path, pose_file):
        script = tmp_path / "gen.py"
        script.write_text(
            "import sys, json, pathlib\n"
            "import numpy as np\n"
            "from PIL import Image\n"
            "out = pathlib.Path(sys.argv[1])\n"
            "seq = json.load(sys.stdin)\n"
            "n = len(seq['frames'])\n"
            "for i in range(n):\n"
            "    arr = np.full((seq['height'], seq['width'], 3), 128, dtype=np.uint8)\n"
            "    Image.fromarray(arr).save(out / f'{i:05}.png')\n"
        )
        out = tmp_path / "o"
        code = run_cli(
            "run", "--pose", pose_file, "--out", out,
            "--generator", f"{sys.executable} {script}",
            "--window", 2, "--stride", 1,
        )
        assert code == 0
        frames = sorted(out.glob("clip_0*.png"))
        assert len(frames) == 3
        img = read_image(frames[0])
        assert np.allclose(img.data, 128.0 / 255.0, atol=1e-7)

    def test_failing_generator_exit_3(self, tmp_path, pose_file):
        code = run_cli(
            "run", "--pose", pose_file, "--out", tmp_path / "o",
            "--generator", f"{sys.executable} -c 'import sys; sys.exit(9)'",
            "--window", 2, "--stride", 1,
        )
        assert code == 3
