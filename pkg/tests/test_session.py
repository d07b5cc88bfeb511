import numpy as np
import pytest

from slicealign.dataset import load_config, scan
from slicealign.errors import AtBoundary, IoError, NoScores
from slicealign.nifti import read_nifti, read_transform_csv
from slicealign.phantom import build_phantom_case
from slicealign.resample import resample_on_slice
from slicealign.session import Session, StyleState


class TestLoadCase:
    def test_fresh_load_all_zero_and_clean(self, session):
        assert not session.dirty
        for sid in session.slice_ids:
            p = session.current_params(sid)
            assert (p.tx, p.ty, p.tz, p.rx, p.ry, p.rz) == (0.0,) * 6

    def test_defaults(self, session):
        assert session.mode == "micro"
        assert session.metric_kind == "nmi"
        assert session.step_translation_mm == 1.0

    def test_settings_preserved_across_shift(self, aligned_phantom, session):
        session.set_mode("macro")
        session.set_steps(2.5, 0.5)
        nxt = Session.load_case(aligned_phantom["table"], aligned_phantom["config"],
                                "case02", previous=session)
        assert nxt.mode == "macro"
        assert nxt.step_translation_mm == 2.5
        assert nxt.styles == session.styles

    def test_reload_same_case_resets_histories(self, aligned_phantom, session):
        session.act("translate", "patient", "z", 4.0)
        reloaded = Session.load_case(aligned_phantom["table"], aligned_phantom["config"],
                                     "case01", previous=session)
        assert not reloaded.dirty
        for sid in reloaded.slice_ids:
            assert reloaded.current_params(sid).tz == 0.0

    def test_shift_autosaves_dirty_previous(self, aligned_phantom, session):
        session.act("translate", "patient", "z", 2.0)
        assert session.dirty
        Session.load_case(aligned_phantom["table"], aligned_phantom["config"],
                          "case02", previous=session)
        assert session.bundle.transform_csv_path.is_file()
        for sid in session.slice_ids:
            assert session.bundle.label_paths[sid].is_file()
        assert not session.dirty


class TestActions:
    def test_micro_applies_to_selected_only(self, session):
        session.set_selected("s02")
        session.act("rotate", "slice", "n", 1.0)
        assert abs(session.current_params("s02").rz) > 0.5
        assert session.current_params("s01").rz == 0.0
        assert session.current_params("s03").rz == 0.0

    def test_macro_increments_every_slice(self, session):
        session.set_mode("macro")
        session.act("translate", "patient", "z", 2.0)
        for sid in session.slice_ids:
            assert session.current_params(sid).tz == 2.0

    def test_micro_undo_at_boundary_raises(self, session):
        with pytest.raises(AtBoundary):
            session.act("undo")

    def test_macro_undo_skips_exhausted_histories(self, session):
        session.act("translate", "patient", "x", 1.0)    # selected s01 only
        session.set_mode("macro")
        session.act("undo")                              # s02/s03 skipped silently
        assert session.current_params("s01").tx == 0.0

    def test_macro_undo_all_exhausted_raises(self, session):
        session.set_mode("macro")
        with pytest.raises(AtBoundary):
            session.act("undo")

    def test_optimize_matches_scan_oracle(self, session):
        session.set_metric_kind("sad")
        for amount in (4.0, -3.0, 2.0):
            session.act("translate", "patient", "z", amount)
        hist = session.histories[session.selected]
        scored = [(i, e.score.value) for i, e in enumerate(hist.entries)
                  if e.score is not None]
        best_idx = min(scored, key=lambda kv: kv[1])[0]
        session.act("optimize")
        assert hist.cursor == best_idx

    def test_optimize_without_scores_raises(self, session):
        with pytest.raises(NoScores):
            session.act("optimize")

    def test_reset_records_identity(self, session):
        session.act("translate", "patient", "x", 3.0)
        session.act("reset")
        assert session.current_params(session.selected).tx == 0.0
        session.act("undo")
        assert session.current_params(session.selected).tx == 3.0

    def test_macro_inverse_restores_matrices(self, session):
        session.set_mode("macro")
        before = {sid: session.current_transform(sid).matrix for sid in session.slice_ids}
        session.act("rotate", "slice", "u", 4.0)
        session.act("rotate", "slice", "u", -4.0)
        for sid in session.slice_ids:
            assert np.abs(session.current_transform(sid).matrix - before[sid]).max() < 1e-9

    def test_cache_equals_fresh_recompute(self, session):
        session.act("translate", "patient", "y", 1.5)
        session.act("rotate", "slice", "v", 2.0)
        sid = session.selected
        s = session.slice_by_id(sid)
        fresh = resample_on_slice(session.volume, s.pose, session.current_transform(sid))
        assert np.array_equal(session.resampled(sid).values, fresh.values)
        assert np.array_equal(session.resampled(sid).valid, fresh.valid)


class TestEvaluate:
    def test_identity_sad_zero(self, session):
        # slices were extracted from the volume itself at their stored pose
        session.set_metric_kind("sad")
        score, best = session.evaluate()
        assert score.value == 0.0
        assert best

    def test_identity_nmi_two(self, session):
        score, _ = session.evaluate()
        assert abs(score.value - 2.0) < 1e-9

    def test_score_returns_after_perturb_and_restore(self, session):
        session.set_metric_kind("sad")
        base, _ = session.evaluate()
        session.act("translate", "patient", "z", 2.0)
        session.act("translate", "patient", "z", -2.0)
        again, _ = session.evaluate()
        assert abs(again.value - base.value) < 1e-6


class TestSaveOutputs:
    def test_writes_csv_and_labels(self, session):
        session.act("translate", "patient", "z", 1.0)
        session.save_outputs()
        rows = read_transform_csv(session.bundle.transform_csv_path)
        assert len(rows) == 3
        assert not session.dirty
        for sid in session.slice_ids:
            img = read_nifti(session.bundle.label_paths[sid])
            assert set(np.unique(img.data)) <= {0.0, 1.0}

    def test_save_twice_byte_identical(self, session):
        session.act("translate", "patient", "x", 0.5)
        session.save_outputs()
        first = {p: p.read_bytes() for p in
                 [session.bundle.transform_csv_path, *session.bundle.label_paths.values()]}
        session.save_outputs()
        for p, blob in first.items():
            assert p.read_bytes() == blob

    def test_unwritable_target_keeps_dirty(self, tmp_path):
        case = build_phantom_case(tmp_path, "c01", seed=9)
        config = load_config(case.config_path)
        s = Session.load_case(scan(config), config, "c01")
        s.act("translate", "patient", "x", 1.0)
        # a plain file where the output directory should be makes mkdir fail
        (tmp_path / "out").write_bytes(b"")
        with pytest.raises(IoError):
            s.save_outputs()
        assert s.dirty

    def test_saved_params_round_trip(self, tmp_path):
        case = build_phantom_case(tmp_path, "c01", seed=12)
        config = load_config(case.config_path)
        table = scan(config)
        s = Session.load_case(table, config, "c01")
        s.act("translate", "patient", "z", 3.25)
        s.act("rotate", "slice", "n", 7.5)
        want = {sid: s.current_params(sid) for sid in s.slice_ids}
        s.save_outputs()
        s2 = Session.load_case(table, config, "c01", previous=s)
        rows = read_transform_csv(s2.bundle.transform_csv_path)
        for _, sid, params in rows:
            got = np.array(params.as_tuple())
            assert np.abs(got - np.array(want[sid].as_tuple())).max() <= 1e-9


class TestStyleState:
    def test_partial_update(self):
        st = StyleState().updated({"label_opacity": 0.8, "checker_width": 16})
        assert st.label_opacity == 0.8 and st.checker_width == 16

    def test_invalid_window_rejected(self):
        with pytest.raises(ValueError):
            StyleState().updated({"slice_window": (5.0, 5.0)})

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            StyleState().updated({"sparkle": 1})

    def test_step_range_enforced(self, session):
        with pytest.raises(ValueError):
            session.set_steps(0.0, 1.0)
        with pytest.raises(ValueError):
            session.set_steps(1.0, 11.0)
