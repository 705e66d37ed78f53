import numpy as np
import pytest

from spinbath.model import (
    EnvQubit,
    ModelConfig,
    ObservableSpec,
    SystemQubit,
    TimeGrid,
    case1_spec,
    case2_spec,
    case3_spec,
    identity_particle_block,
    identity_system_block,
    spin_x_block,
)

from conftest import random_config, random_particle_block, random_system_block


def test_identity_block():
    blk = identity_particle_block()
    assert (blk.e_uu, blk.e_dd, blk.e_ud) == (1.0, 1.0, 0j)
    m = blk.matrix()
    np.testing.assert_array_equal(m, m.conj().T)


def test_normalization_enforced():
    with pytest.raises(ValueError):
        SystemQubit(1.0, 0.1)
    with pytest.raises(ValueError):
        EnvQubit(0.5, 0.5, 1.0)
    SystemQubit(1 / np.sqrt(2), 1j / np.sqrt(2))


def test_empty_env_rejected():
    with pytest.raises(ValueError):
        ModelConfig(SystemQubit(1, 0), ())


def test_blocks_are_hermitian(rng):
    for _ in range(20):
        for blk in (random_particle_block(rng), random_system_block(rng)):
            m = blk.matrix()
            np.testing.assert_array_equal(m, m.conj().T)


def test_case1_spec(rng):
    config = random_config(rng, 3)
    sys_block = random_system_block(rng)
    spec = case1_spec(config, sys_block)
    assert spec.system_block == sys_block
    assert spec.particle_blocks == (identity_particle_block(),) * 3


def test_case2_spec(rng):
    config = random_config(rng, 2)
    blk = random_particle_block(rng)
    spec = case2_spec(config, 1, blk)
    assert spec.system_block == identity_system_block()
    assert spec.particle_blocks == (blk, identity_particle_block())
    single = case2_spec(random_config(rng, 1), 1, blk)
    assert single.particle_blocks == (blk,)
    with pytest.raises(IndexError):
        case2_spec(config, 3, blk)
    with pytest.raises(IndexError):
        case2_spec(config, 0, blk)


def test_case3_spec(rng):
    config = random_config(rng, 4)
    blocks = [spin_x_block()] * 4
    assert case3_spec(config, blocks).particle_blocks == tuple(blocks)
    two = case3_spec(config, blocks[:2])
    assert two.particle_blocks[2:] == (identity_particle_block(),) * 2
    with pytest.raises(ValueError):
        case3_spec(config, [spin_x_block()] * 5)
    with pytest.raises(ValueError):
        case3_spec(config, [])


def test_case3_p1_equals_case2_j1(rng):
    config = random_config(rng, 5)
    blk = random_particle_block(rng)
    assert case3_spec(config, [blk]) == case2_spec(config, 1, blk)


@pytest.mark.parametrize("n", [1, 2, 7])
def test_spec_lengths_match_n(rng, n):
    config = random_config(rng, n)
    blk = random_particle_block(rng)
    for spec in (
        case1_spec(config, random_system_block(rng)),
        case2_spec(config, n, blk),
        case3_spec(config, [blk] * n),
    ):
        assert spec.n == n


def test_pairing_check(rng):
    config = random_config(rng, 3)
    spec = ObservableSpec(identity_system_block(), (identity_particle_block(),) * 2)
    with pytest.raises(ValueError):
        spec.check_pairing(config)


def test_time_grid():
    grid = TimeGrid(0.0, 1.0, 2)
    np.testing.assert_array_equal(grid.times(), [0.0, 1.0])
    assert grid.spacing == 1.0
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 1)


def test_head(rng):
    config = random_config(rng, 6)
    assert config.head(2).env == config.env[:2]
    with pytest.raises(ValueError):
        config.head(7)
