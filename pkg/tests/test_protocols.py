import numpy as np
import pytest
from scipy import stats

from secagg_sim import crypto
from secagg_sim.api import DropoutPlan
from secagg_sim.errors import ConfigError, InvalidParams
from secagg_sim.field import GF, PrimeField
from secagg_sim.protocols import PROTOCOLS, get_protocol
from secagg_sim.protocols.masking import MaskingParams, MaskingServer
from secagg_sim.protocols.stevens import StevensParams, lwe_mask
from secagg_sim.runner import random_inputs, simulate

SMALL = {"s_len": 8}


def centered(v, q):
    v = np.asarray(v, dtype=np.int64)
    return np.where(v > q // 2, v - q, v)


@pytest.mark.parametrize("name", sorted(PROTOCOLS))
def test_exact_without_dropouts(name):
    for seed in range(5):
        x = random_inputs(8, 20, np.random.default_rng(seed))
        out = simulate(name, x, seed=seed, **SMALL)
        assert out.result.status == "success", out.result.reason
        assert np.array_equal(out.output, GF.vec_sum(x))


@pytest.mark.parametrize("name", sorted(PROTOCOLS))
def test_survivor_sum_under_dropouts(name):
    for seed in range(3):
        x = random_inputs(20, 15, np.random.default_rng(seed))
        out = simulate(name, x, delta=0.1, seed=seed, **SMALL)
        assert out.result.status == "success", out.result.reason
        assert len(out.result.dropped_clients) == 2
        assert np.array_equal(out.output, out.survivor_sum())


def test_secret_sharing_unit_vectors():
    out = simulate("secret_sharing", np.eye(4, dtype=np.uint64), threshold=2)
    assert out.output.tolist() == [1, 1, 1, 1]


def test_secret_sharing_fails_when_everyone_leaves_before_summing():
    plan = DropoutPlan(0.0, {1: 3, 2: 3, 3: 3})
    out = simulate("secret_sharing", np.ones((3, 2), dtype=np.uint64), dropout=plan)
    assert out.result.status == "failed"
    assert out.result.reason.startswith("threshold")


def test_secret_sharing_threshold_failure_with_too_few_sums():
    # three of five holders vanish before returning their sums; t=3 needs three
    plan = DropoutPlan(0.0, {1: 3, 2: 3, 3: 3})
    out = simulate("secret_sharing", np.ones((5, 2), dtype=np.uint64), dropout=plan, threshold=3)
    assert out.result.status == "failed"


def test_secret_sharing_share_bytes_scale_with_n():
    def round2(n):
        x = random_inputs(n, 50, np.random.default_rng(0))
        r = simulate("secret_sharing", x).result
        return r.round_bytes_sent[2][1:].sum() / n  # per-client share upload

    ratio = round2(32) / round2(16)
    assert ratio == pytest.approx(2.0, rel=0.05)


def test_stevens_small_exact():
    x = random_inputs(8, 32, np.random.default_rng(3))
    out = simulate("stevens", x, s_len=4)
    assert np.array_equal(out.output, GF.vec_sum(x))


def test_stevens_error_bound():
    n, eta = 8, 1
    worst = 0
    for seed in range(10):
        x = random_inputs(n, 64, np.random.default_rng(seed))
        out = simulate("stevens", x, seed=seed, s_len=8, error_dist="centered-binomial", eta=eta)
        diff = centered(GF.vec_sub(out.output, GF.vec_sum(x)), GF.q)
        worst = max(worst, int(np.abs(diff).max()))
        assert np.abs(diff).max() <= n * eta
    assert worst > 0  # the noise is actually there


def test_stevens_packing_saves_share_bytes():
    x = random_inputs(16, 40, np.random.default_rng(1))
    packed = simulate("stevens", x, seed=2, s_len=64, pack_k=4)
    plain = simulate("stevens", x, seed=2, s_len=64, pack_k=1)
    assert np.array_equal(packed.output, plain.output)
    assert packed.result.round_bytes_sent[2][1:].sum() < plain.result.round_bytes_sent[2][1:].sum()


def test_stevens_packing_clamped_for_dropouts():
    p = StevensParams(pack_k=16, delta=0.1)
    sp = p.share_params(20, GF.q)
    # 18 survivors must still reach t + k - 1 with t = 10
    assert sp.t == 10 and sp.pack_k == 9 and sp.t + sp.pack_k - 1 <= 18
    assert StevensParams(pack_k=3).share_params(64, GF.q).pack_k == 3


def test_lwe_mask_matches_dense_product():
    s = GF.random_vector(5, np.random.default_rng(0))
    length = 2500  # spans three blocks of A
    blocks = [
        GF.random_matrix((min(1024, length - i), 5), np.random.default_rng([9, b]))
        for b, i in enumerate(range(0, length, 1024))
    ]
    A = np.vstack(blocks).astype(object)
    want = (A.dot(s.astype(object)) % GF.q).astype(np.uint64)
    assert np.array_equal(lwe_mask(GF, 9, length, s), want)


def test_bonawitz_two_clients_by_hand():
    out = simulate("bonawitz", [[1], [2]], seed=5)
    assert out.output.tolist() == [3]
    c1, c2 = out.clients
    # redo y_1 and y_2 from the clients' own secrets
    s12 = crypto.mask_seed(crypto.agree(c1.keypair.private_key, c2.keypair.public_key))
    pair = crypto.expand_mask(s12, 1, GF)
    y1 = (1 + int(crypto.expand_mask(c1.b_seed, 1, GF)[0]) + int(pair[0])) % GF.q
    y2 = (2 + int(crypto.expand_mask(c2.b_seed, 1, GF)[0]) - int(pair[0])) % GF.q
    assert out.server.masked[1].tolist() == [y1]
    assert out.server.masked[2].tolist() == [y2]
    assert out.server.recovered_b == {1: c1.b_seed, 2: c2.b_seed}


def test_bonawitz_one_drop_after_sharing():
    x = random_inputs(8, 30, np.random.default_rng(0))
    out = simulate("bonawitz", x, dropout=DropoutPlan(0.125, {5: 3}), delta=0.125)
    assert out.result.status == "success"
    assert out.server.dropped_after_sharing == [5]
    want = GF.vec_sum(x[[i for i in range(8) if i != 4]])
    assert np.array_equal(out.output, want)
    assert out.server.recovered_sk[5] == out.clients[4].keypair.private_key


def test_bonawitz_exact_many_seeds():
    for seed in range(100):
        x = random_inputs(8, 4, np.random.default_rng(seed))
        assert np.array_equal(simulate("bonawitz", x, seed=seed).output, GF.vec_sum(x))


def test_bell_full_graph_matches_bonawitz():
    x = random_inputs(8, 16, np.random.default_rng(0))
    bell = simulate("bell", x, seed=3, graph_k=7)
    bon = simulate("bonawitz", x, seed=3)
    assert np.array_equal(bell.output, bon.output)
    for u in bon.server.masked:
        assert np.array_equal(bell.server.masked[u], bon.server.masked[u])


def test_bell_sparse_graph_limits_peers():
    x = random_inputs(40, 10, np.random.default_rng(0))
    out = simulate("bell", x, seed=1, graph_k=4, delta=0.05)
    assert out.result.status == "success"
    assert np.array_equal(out.output, out.survivor_sum())
    for c in out.clients:
        if hasattr(c, "channels"):
            assert set(c.channels.shared) <= set(out.server.graph.neighbors(c.id))


def test_bell_random_placement():
    x = random_inputs(30, 5, np.random.default_rng(0))
    out = simulate("bell", x, seed=1, graph_k=6, random_placement=True, delta=0.1)
    assert out.result.status == "success"
    assert np.array_equal(out.output, out.survivor_sum())
    assert out.server.graph.neighbors(1) != tuple(range(2, 5)) + (28, 29, 30)


@pytest.mark.slow
def test_bell_thousand_clients():
    x = random_inputs(1000, 20, np.random.default_rng(0))
    out = simulate("bell", x, seed=0, graph_k=50, delta=0.05)
    assert out.result.status == "success"
    assert len(out.result.dropped_clients) == 50
    assert np.array_equal(out.output, out.survivor_sum())


@pytest.mark.slow
def test_share_round_bytes_bell_flat_bonawitz_linear():
    def share_bytes(name, n, **kw):
        out = simulate(name, random_inputs(n, 10, np.random.default_rng(n)), seed=n, **kw)
        return out.result.round_bytes_sent[2][1:].mean()

    assert share_bytes("bell", 4096, graph_k=50) / share_bytes("bell", 256, graph_k=50) == pytest.approx(1, rel=0.05)
    # 16x the clients: 16x the share traffic without the graph
    assert share_bytes("bonawitz", 512) / share_bytes("bonawitz", 32) == pytest.approx(16, rel=0.1)


def test_masked_inputs_look_uniform():
    small = PrimeField(257)
    x = np.full((3, 256), 7, dtype=np.uint64)
    pooled = []
    for seed in range(20):
        out = simulate("bonawitz", x, field=small, seed=seed)
        assert out.output.tolist() == [21] * 256
        pooled.append(out.server.masked[1])
    counts = np.bincount(np.concatenate(pooled).astype(np.int64), minlength=257)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_recovery_fails_below_threshold():
    # four of eight leave after sharing; threshold 5 of 7 neighbors cannot be met
    plan = DropoutPlan(0.5, {1: 4, 2: 4, 3: 4, 4: 4})
    x = random_inputs(8, 5, np.random.default_rng(0))
    out = simulate("bonawitz", x, dropout=plan, delta=0.5)
    assert out.result.status == "failed"
    assert out.result.reason.startswith("threshold")


def test_server_rejects_inconsistent_recovery_answers():
    server = MaskingServer([1, 2, 3], params=MaskingParams())
    server.u3, server.dropped_after_sharing = [1, 2], [3]
    server.masked = {1: GF.vector([1]), 2: GF.vector([1])}
    server._unmask({1: ({2: "b"}, {2: "sk"}), 2: ({}, {})})
    assert server.status == "failed" and "both" in server.reason
    other = MaskingServer([1, 2, 3], params=MaskingParams())
    other.u3, other.dropped_after_sharing = [1, 2], [3]
    other.masked = server.masked
    other._unmask({1: ({3: "b"}, {}), 2: ({}, {})})
    assert other.status == "failed"


def test_client_refuses_overlapping_request():
    x = random_inputs(3, 2, np.random.default_rng(0))
    out = simulate("bonawitz", x)
    client = out.clients[0]
    assert client.round(4, ([2, 3], [3])) is None


def test_registry_and_params():
    with pytest.raises(ConfigError):
        get_protocol("nope")
    p = get_protocol("stevens").make_params(delta=0.1, s_len=3, graph_k=9)
    assert p.s_len == 3 and p.delta == 0.1 and p.pack_k == 16
    assert get_protocol("stevens_unpacked").make_params(delta=0).pack_k == 1
    assert MaskingParams(graph_k=50).degree_for(20) == 19
    assert MaskingParams().degree_for(1024) == 20
    with pytest.raises(InvalidParams):
        StevensParams(error_dist="gaussian")
