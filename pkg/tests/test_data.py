import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qae3d.data import (
    MotionDataset,
    NormalizationParams,
    SplitSpec,
    chunked_split,
    clamp_unit,
    compute_normalization,
    denormalize,
    load_csv,
    normalize,
    select_joints,
    split_indices,
    synthesize_chain,
    write_csv,
)
from qae3d.encoding import qubits_for
from qae3d.errors import DataError
from qae3d.estimators import ConstantBaseline


class TestNormalization:
    def test_box(self):
        p = compute_normalization(np.array([[[0, 0, 0], [2, 1, 1]]]))
        assert np.array_equal(p.v_min, [0, 0, 0]) and p.s == 2

    def test_symmetric_box(self):
        p = compute_normalization(np.array([[[-1, -1, -1], [1, 1, 1]]]))
        assert np.array_equal(p.v_min, [-1, -1, -1]) and p.s == 2

    def test_degenerate(self):
        p = compute_normalization(np.ones((5, 3, 3)))
        assert p.s == 1

    def test_example(self):
        p = NormalizationParams([0, 0, 0], 2.0)
        assert np.array_equal(normalize([2, 1, 1], p), [1, 0.5, 0.5])
        assert np.array_equal(normalize([[3, -2, 5]], NormalizationParams([3, -2, 5], 4.0)), [[0, 0, 0]])

    @settings(max_examples=50)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        frames = rng.normal(size=(4, 5, 3))
        p = compute_normalization(frames)
        n = normalize(frames, p)
        assert n.min() >= 0 and n.max() <= 1 + 1e-15
        assert np.allclose(denormalize(n, p), frames, rtol=0, atol=1e-15 * max(1.0, np.abs(frames).max()) * 4)

    def test_dict_roundtrip(self):
        p = NormalizationParams([0.1, 0.2, 0.3], 1.7)
        q = NormalizationParams.from_dict(p.to_dict())
        assert np.array_equal(p.v_min, q.v_min) and p.s == q.s

    def test_nonpositive_scale(self):
        with pytest.raises(ValueError):
            NormalizationParams([0, 0, 0], 0.0)

    def test_empty(self):
        with pytest.raises(DataError):
            compute_normalization(np.zeros((0, 2, 3)))

    def test_clamp_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            out = clamp_unit([[1.2, -0.1, 0.5]])
        assert np.array_equal(out, [[1.0, 0.0, 0.5]])
        assert "clamped 2" in caplog.text


class TestSplit:
    @pytest.mark.parametrize("n,train,test", [(240, 192, 48), (480, 384, 96), (100, 80, 20)])
    def test_counts(self, n, train, test):
        tr, te = split_indices(n, 12.0)
        assert (len(tr), len(te)) == (train, test)

    def test_chunk_order(self):
        tr, te = split_indices(480, 12.0)
        assert np.array_equal(tr[:192], np.arange(192))
        assert np.array_equal(te[:48], np.arange(192, 240))
        assert tr[192] == 240

    @given(n=st.integers(1, 2000), fps=st.sampled_from([6.0, 12.0, 30.0]))
    def test_partition(self, n, fps):
        tr, te = split_indices(n, fps)
        assert np.array_equal(np.sort(np.concatenate([tr, te])), np.arange(n))

    def test_chunked_split(self):
        ds = synthesize_chain(300, 3, seed=0)
        tr, te = chunked_split(ds, SplitSpec(16, 4))
        assert tr.n_frames + te.n_frames == 300
        assert np.array_equal(te.frames[0], ds.frames[192])

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SplitSpec(0, 4)


class TestSelectJoints:
    def test_all(self):
        ds = synthesize_chain(10, 4)
        assert np.array_equal(select_joints(ds, range(4)).frames, ds.frames)

    def test_three_joints_layout(self):
        sub = select_joints(synthesize_chain(10, 16), [5, 6, 7])
        assert sub.n_vertices == 3 and qubits_for(3) == 4
        assert sub.joint_names == ["joint5", "joint6", "joint7"]

    def test_empty(self):
        with pytest.raises(DataError):
            select_joints(synthesize_chain(10, 4), [])

    def test_out_of_range(self):
        with pytest.raises(DataError):
            select_joints(synthesize_chain(10, 4), [4])


def write(tmp_path, text):
    p = tmp_path / "d.csv"
    p.write_text(text)
    return p


class TestCsv:
    def test_well_formed(self, tmp_path):
        p = write(tmp_path, "frame,joint,x,y,z\n0,0,0,0,0\n0,1,1,0,0\n1,0,0,1,0\n1,1,0,0,1\n")
        ds = load_csv(p)
        assert ds.frames.shape == (2, 2, 3) and ds.fps == 12.0
        assert np.array_equal(ds.frames[1, 1], [0, 0, 1])

    def test_row_with_four_fields(self, tmp_path):
        p = write(tmp_path, "frame,joint,x,y,z\n0,0,0,0,0\n0,1,1,0\n")
        with pytest.raises(DataError, match=":3:"):
            load_csv(p)

    def test_missing_joint(self, tmp_path):
        p = write(tmp_path, "frame,joint,x,y,z\n0,0,0,0,0\n0,1,1,0,0\n1,0,0,1,0\n")
        with pytest.raises(DataError, match="frame 1"):
            load_csv(p)

    def test_bad_header(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "f,j,x,y,z\n"))

    def test_non_numeric(self, tmp_path):
        with pytest.raises(DataError, match=":2:"):
            load_csv(write(tmp_path, "frame,joint,x,y,z\n0,0,a,0,0\n"))

    def test_duplicate_joint(self, tmp_path):
        with pytest.raises(DataError, match="duplicate"):
            load_csv(write(tmp_path, "frame,joint,x,y,z\n0,0,0,0,0\n0,0,0,0,0\n"))

    def test_gap_in_frames(self, tmp_path):
        with pytest.raises(DataError, match="contiguous"):
            load_csv(write(tmp_path, "frame,joint,x,y,z\n0,0,0,0,0\n2,0,0,0,0\n"))

    def test_fps_comment_and_override(self, tmp_path):
        p = write(tmp_path, "# fps=30\nframe,joint,x,y,z\n0,0,0,0,0\n")
        assert load_csv(p).fps == 30.0
        assert load_csv(p, fps=5).fps == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_roundtrip_exact(self, tmp_path):
        ds = synthesize_chain(20, 5, seed=3, fps=24.0)
        write_csv(ds, tmp_path / "x.csv")
        back = load_csv(tmp_path / "x.csv")
        assert np.array_equal(back.frames, ds.frames) and back.fps == 24.0


class TestSynth:
    def test_deterministic(self):
        a = synthesize_chain(50, 6, seed=7)
        b = synthesize_chain(50, 6, seed=7)
        assert np.array_equal(a.frames, b.frames)
        assert not np.array_equal(a.frames, synthesize_chain(50, 6, seed=8).frames)

    def test_unit_segments_and_root(self):
        ds = synthesize_chain(30, 5, seed=1)
        seg = np.linalg.norm(np.diff(ds.frames, axis=1), axis=-1)
        assert np.allclose(seg, 1.0) and np.array_equal(ds.frames[:, 0], np.zeros((30, 3)))

    def test_zero_amplitude_constant(self):
        ds = synthesize_chain(40, 2, seed=0, amplitude=0.0)
        assert np.array_equal(ds.frames, np.broadcast_to(ds.frames[0], ds.frames.shape))
        tr, te = chunked_split(ds)
        assert ConstantBaseline().fit(tr).score(te) == pytest.approx(0, abs=1e-12)

    def test_nondegenerate_box(self):
        assert compute_normalization(synthesize_chain(1200, 16, seed=7)).s > 0

    def test_too_few_joints(self):
        with pytest.raises(ValueError):
            synthesize_chain(10, 1)


class TestDataset:
    def test_shape_check(self):
        with pytest.raises(DataError):
            MotionDataset(np.zeros((3, 4)))

    def test_fps_check(self):
        with pytest.raises(DataError):
            MotionDataset(np.zeros((3, 4, 3)), fps=0)
