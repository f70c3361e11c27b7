import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gccache.core import BlockMap, ConfigError, ItemId, Simulator, simulate
from gccache.policies import BlockLRU, GCMarking, IBLP, IblpConfig, ItemLRU, make_policy

from strategies import X1, X2, XY_MAP, Y1, classic_lru_misses, instances

TRACE = [X1, X2, Y1, X1]


def test_item_lru_examples():
    assert simulate(ItemLRU(2), TRACE, XY_MAP, 2).misses == 4
    m = BlockMap(1, {0: 1, 1: 1, 2: 1})
    a, b, c = (ItemId(i, 0) for i in range(3))
    r = simulate(ItemLRU(3), [a, b, c, a], m, 3)
    assert r.misses == 3 and r.per_access[-1].hit


def test_block_lru_example():
    assert simulate(BlockLRU(2, XY_MAP), TRACE, XY_MAP, 2).misses == 3


def test_block_lru_scan_one_miss_per_block():
    m = BlockMap.uniform(10, 4)
    trace = list(m.all_items())
    assert simulate(BlockLRU(8, m), trace, m, 8).misses == 10


def test_block_lru_pollution():
    # one item from each of k/B + 1 blocks, cycled: every access misses
    m = BlockMap.uniform(5, 2)
    trace = [ItemId(b, 0) for b in range(5)] * 6
    assert simulate(BlockLRU(8, m), trace, m, 8).misses == len(trace)


def test_block_lru_needs_room_for_a_block():
    with pytest.raises(ConfigError):
        BlockLRU(1, XY_MAP)


def test_iblp_example():
    r = simulate(IBLP(1, 2, XY_MAP), TRACE, XY_MAP, 3)
    assert r.misses == 3 and r.per_access[1].hit


def test_iblp_config_checks():
    with pytest.raises(ConfigError):
        IblpConfig(2, 3).check(XY_MAP)
    with pytest.raises(ConfigError):
        make_policy("iblp:2,2", 5, XY_MAP)


def test_contents_examples():
    p = ItemLRU(2)
    assert p.contents() == frozenset()
    simulate(p, [X1], XY_MAP, 2)
    assert p.contents() == {X1}
    q = BlockLRU(2, XY_MAP)
    simulate(q, [X1], XY_MAP, 2)
    assert q.contents() == {X1, X2}


# -- GC-Marking -----------------------------------------------------------------

def test_marking_scan_has_spatial_hits_only():
    m = BlockMap.uniform(6, 3)
    trace = list(m.all_items())
    r = simulate(GCMarking(6, m, 5), trace, m, 6)
    assert r.misses == 6 and r.spatial_hits == r.hits == 12


def test_marking_clears_marks_when_all_marked():
    m = BlockMap(1, {0: 1, 1: 1, 2: 1})
    pol = GCMarking(2, m, 0)
    simulate(pol, [ItemId(0, 0), ItemId(1, 0), ItemId(2, 0)], m, 2)
    assert pol.marked == {ItemId(2, 0)}


def test_marking_partial_load_when_block_does_not_fit():
    m = BlockMap.uniform(3, 2)
    pol = GCMarking(3, m, 0)
    r = simulate(pol, [ItemId(0, 0), ItemId(1, 0), ItemId(2, 0)], m, 3)
    assert r.per_access[2].op.loaded == {ItemId(2, 0)}
    assert r.per_access[2].op.evicted == {ItemId(1, 1)}


def test_marking_needs_room_for_a_block():
    with pytest.raises(ConfigError):
        GCMarking(1, XY_MAP)


@settings(max_examples=100)
@given(instances(max_len=20), st.integers(1, 3), st.integers(0, 2**32))
def test_marking_never_evicts_marked_while_unmarked_exist(inst, mult, seed):
    bmap, trace = inst
    k = mult * bmap.max_block_size
    pol = GCMarking(k, bmap, seed)
    sim = Simulator(pol, bmap, k)
    for x in trace:
        marked, resident = set(pol.marked), set(pol.resident)
        rec = sim.step(x)
        if not rec.hit and resident - marked:
            assert not (rec.op.evicted & marked)
        assert pol.marked <= pol.resident


@settings(max_examples=50)
@given(instances(max_len=20), st.integers(0, 1000))
def test_marking_seed_reproducible(inst, seed):
    bmap, trace = inst
    k = 2 * bmap.max_block_size
    a = simulate(GCMarking(k, bmap, seed), trace, bmap, k)
    b = simulate(GCMarking(k, bmap, seed), trace, bmap, k)
    assert a == b


# -- structural properties -------------------------------------------------------

@settings(max_examples=300)
@given(instances(max_len=20), st.integers(1, 4), st.integers(0, 3))
def test_iblp_never_worse_than_its_item_layer(inst, elem, nblocks):
    bmap, trace = inst
    bp = nblocks * bmap.max_block_size
    iblp = IBLP(elem, bp, bmap)
    ref = ItemLRU(elem, bmap)
    a = Simulator(iblp, bmap, elem + bp)
    b = Simulator(ref, bmap, elem)
    for x in trace:
        # the item layer is exactly a standalone item LRU of the same size
        assert (x in iblp.items.lru) == (x in ref.contents())
        a.step(x)
        b.step(x)
    assert a.result.misses <= b.result.misses


@settings(max_examples=100)
@given(instances(max_len=20), st.integers(1, 3))
def test_block_lru_holds_whole_blocks(inst, mult):
    bmap, trace = inst
    k = mult * bmap.max_block_size
    pol = BlockLRU(k, bmap)
    sim = Simulator(pol, bmap, k)
    for x in trace:
        sim.step(x)
        held = pol.contents()
        for b in {y.block for y in held}:
            assert set(bmap.items(b)) <= held


@settings(max_examples=100)
@given(instances(max_len=20), st.integers(1, 4))
def test_degenerate_splits(inst, mult):
    bmap, trace = inst
    k = mult * bmap.max_block_size
    item = simulate(ItemLRU(k, bmap), trace, bmap, k)
    block = simulate(BlockLRU(k, bmap), trace, bmap, k)
    assert simulate(IBLP(k, 0, bmap), trace, bmap, k).per_access == item.per_access
    assert simulate(IBLP(0, k, bmap), trace, bmap, k).per_access == block.per_access


@settings(max_examples=100)
@given(instances(max_B=1, max_blocks=6, max_len=20), st.integers(1, 4), st.integers(0, 4))
def test_unit_blocks_give_classic_lru(inst, k, elem):
    bmap, trace = inst
    ref = classic_lru_misses(trace, k)
    assert simulate(ItemLRU(k, bmap), trace, bmap, k).misses == ref
    assert simulate(BlockLRU(k, bmap), trace, bmap, k).misses == ref
    elem = min(elem, k)
    # An item survives k distinct later requests in neither layer: at most elem-1 of them
    # hit the item layer, so at least bp+1 refresh the block layer.  Hence IBLP's contents
    # are always a subset of LRU(k)'s, and interior splits can only lose.
    assert simulate(IBLP(elem, k - elem, bmap), trace, bmap, k).misses >= ref


# -- selection strings -----------------------------------------------------------

@pytest.mark.parametrize("spec,cls", [("item-lru", ItemLRU), ("block-lru", BlockLRU),
                                      ("iblp:2,2", IBLP), ("gc-marking:7", GCMarking)])
def test_make_policy(spec, cls):
    assert isinstance(make_policy(spec, 4, XY_MAP), cls)


@pytest.mark.parametrize("spec", ["lru", "iblp:x", "gc-marking:z", "item-lru:3"])
def test_make_policy_rejects(spec):
    with pytest.raises(ValueError, match="supported|expected|seed"):
        make_policy(spec, 4, XY_MAP)


def _classic_marking_misses(trace, k, seed):
    """Textbook marking algorithm; one uniform draw from sorted unmarked pages per eviction."""
    import random
    rng = random.Random(seed)
    cache, marked, misses = set(), set(), 0
    for x in trace:
        if x not in cache:
            misses += 1
            if len(cache) == k:
                if not cache - marked:
                    marked.clear()
                cache.remove(rng.sample(sorted(cache - marked), 1)[0])
            cache.add(x)
        marked.add(x)
    return misses


@settings(max_examples=100)
@given(instances(max_B=1, max_blocks=6, max_len=25), st.integers(1, 4), st.integers(0, 99))
def test_unit_blocks_give_classic_marking(inst, k, seed):
    bmap, trace = inst
    got = simulate(GCMarking(k, bmap, seed), trace, bmap, k).misses
    assert got == _classic_marking_misses(trace, k, seed)
