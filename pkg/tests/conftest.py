import pytest

from lpdmi.cli import main


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    """Standard benchmark dataset: 3 classes x 4 subjects x 3 reps."""
    data = tmp_path_factory.mktemp("synth_data")
    rc = main(["synth", "--classes", "3", "--subjects", "4", "--reps", "3",
               "--seed", "7", "--output", str(data)])
    assert rc == 0
    return data
