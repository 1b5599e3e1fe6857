import pytest

from posecontest.config import RunConfig, build_scenario
from posecontest.dqn import DqnConfig


@pytest.fixture(scope="session")
def default_cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def default_scenario(default_cfg):
    # Building the four 300-frame users and their loss tables is the slow
    # part; share one instance across the whole run.
    return build_scenario(default_cfg)


@pytest.fixture(scope="session")
def tiny_cfg():
    return RunConfig(
        users=3,
        native_rate=6,
        frame_count=12,
        budget=9,
        pool=12.0,
        profiles=("run", "wave", "stand"),
        search_step=3.0,
        dqn=DqnConfig(
            episodes=2,
            steps_per_episode=6,
            batch_size=4,
            buffer_capacity=32,
            hidden_sizes=(8,),
            target_sync=5,
        ),
    )


@pytest.fixture(scope="session")
def tiny_scenario(tiny_cfg):
    return build_scenario(tiny_cfg)
