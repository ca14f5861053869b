import pytest
import torch


@pytest.fixture(scope="session")
def checkpoint_path(tmp_path_factory):
    """Randomly initialized torchvision VGG19 feature weights, saved as .pth.

    Only the features.* entries are kept; the classifier would triple the
    file size and the exporter ignores it anyway.
    """
    torchvision = pytest.importorskip("torchvision")
    torch.manual_seed(0)
    model = torchvision.models.vgg19(weights=None)
    state = {k: v for k, v in model.state_dict().items() if k.startswith("features.")}
    path = tmp_path_factory.mktemp("ckpt") / "vgg19_random.pth"
    torch.save(state, path)
    return str(path)


@pytest.fixture(scope="session")
def exported_path(checkpoint_path, tmp_path_factory):
    from weights_export import ExportManifest, export_vgg19

    out = str(tmp_path_factory.mktemp("ddcw") / "vgg19_random.ddcw")
    export_vgg19(ExportManifest(checkpoint=checkpoint_path, out=out))
    return out
