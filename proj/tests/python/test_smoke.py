import tensekit


def test_version():
    assert tensekit.__version__
