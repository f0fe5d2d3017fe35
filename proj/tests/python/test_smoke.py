import os
from pathlib import Path

import pytest

import scriptbench as sb

SOURCE = Path(os.environ.get("SCRIPTBENCH_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_char_count_is_code_points():
    assert sb.char_count("剧本ab") == 4
    assert sb.char_count("") == 0


def test_clean_and_split():
    cleaned = sb.clean_text("﻿A: one.\r\nB: two.\r\n")
    assert cleaned == "A: one.\nB: two.\n"
    upper, lower = sb.split_halves("aaaaaaaa\nbbbb\ncccc\n")
    assert upper + lower == "aaaaaaaa\nbbbb\ncccc\n"


def test_tokenize_and_rouge():
    assert sb.tokenize("我们在北京。 Maya") == ["我们", "在", "北京", "。", "Maya"]
    assert sb.lcs_length(list("abcbdab"), list("bdcaba")) == 4
    r = sb.rouge_l(["a", "b"], ["a", "b"])
    assert r["f1"] == 1.0
    assert sb.rouge_l(["a"], ["b"])["f1"] == 0.0


def test_profile_and_contract():
    text = "A: one.\nB: two.\nC: three.\nD: four.\n"
    p = sb.detect_profile(text)
    assert p["dialogue_marker"] == "ROLE_COLON"
    assert "ROLE_COLON" in sb.render_contract(p)
    f = sb.extract_features(text, p)
    assert f["dialogue_ratio"] == pytest.approx(1.0)
    assert sb.structural_similarity(f, f) == 1.0


def test_composite_and_bands():
    assert sb.composite(0.2114, 0.9299, 44.79) == pytest.approx(0.4979, abs=5e-5)
    assert sb.effect_band(1.04) == "Large"
    assert sb.effect_band(-0.43) == "Small"
    with pytest.raises(sb.InputError):
        sb.composite(1.5, 0.5, 50)


def test_paired_statistics():
    r = sb.paired_test([2, 4, 6], [1, 2, 3])
    assert r["n_pairs"] == 3
    assert r["t_stat"] == pytest.approx(3.4641016151377544)
    assert r["cohens_d"] == pytest.approx(2.0)
    w, p = sb.shapiro_wilk([1.0, 2.0, 3.0])
    assert w == pytest.approx(1.0)
    with pytest.raises(sb.StatsError):
        sb.paired_test([1, 1], [1, 1])


def test_verdict_parsing():
    reply = (
        '{"scores": {"overall_similarity_0_100": 70, "plot_event_alignment": 60, '
        '"character_consistency": 80, "tone_style_match": 75, "format_match": 90, '
        '"ending_closure": 50}, "diff_evidence": [], "mechanism_attribution": {}}'
    )
    v = sb.parse_verdict("Sure.\n" + reply)
    assert v["overall_similarity_0_100"] == 70
    assert v["diff_evidence"] == []
    with pytest.raises(sb.VerdictError):
        sb.parse_verdict("no json at all")


def test_offline_pipeline(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    run = sb.run_pipeline(SOURCE / "configs" / "offline.json", SOURCE / "data" / "minicorpus",
                          tmp_path, "py")
    assert (run / "report" / "tables.md").exists()
    assert (run / "stats" / "stats_report.json").exists()
    with pytest.raises(sb.ConfigError):
        sb.run_pipeline(tmp_path / "missing.json", SOURCE / "data" / "minicorpus", tmp_path, "x")
