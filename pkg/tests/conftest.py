import pytest

from pipeline_fixture import build_backgrounds, build_object_images


@pytest.fixture(scope="session")
def object_dir(tmp_path_factory):
    """The bundled 10-image white-background object fixture."""
    return build_object_images(tmp_path_factory.mktemp("objects_src"))


@pytest.fixture(scope="session")
def background_dir(tmp_path_factory):
    return build_backgrounds(tmp_path_factory.mktemp("backgrounds"))
