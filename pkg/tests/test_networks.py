import torch
import pytest

from rdclab import networks
from rdclab.datamodel import QuantizerSpec

SPEC = QuantizerSpec(3, 3)


def rand_images(n, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return torch.rand((n, 1, 28, 28), generator=gen)


class TestEncoder:
    def test_output_range_and_length(self):
        enc = networks.build_encoder(SPEC)
        enc.eval()
        out = enc(rand_images(16))
        assert out.shape == (16, 3)
        assert out.abs().max() <= 1.0

    def test_parameter_count_closed_form(self):
        widths = (512, 256, 128, 64)
        enc = networks.build_encoder(SPEC, widths)
        sizes = (784,) + widths + (SPEC.dim,)
        expected = sum(
            i * o + o + 2 * o  # affine weight+bias, batchnorm scale+shift
            for i, o in zip(sizes[:-1], sizes[1:])
        )
        assert sum(p.numel() for p in enc.parameters()) == expected

    def test_rejects_wrong_width_count(self):
        with pytest.raises(ValueError):
            networks.build_encoder(SPEC, (512, 256))


class TestDecoder:
    def test_output_shape_and_range(self):
        dec = networks.build_decoder(SPEC)
        dec.eval()
        out = dec(torch.randn(8, 3))
        assert out.shape == (8, 1, 28, 28)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_zero_code_is_finite(self):
        dec = networks.build_decoder(SPEC)
        dec.eval()
        assert torch.isfinite(dec(torch.zeros(2, 3))).all()


class TestCritic:
    def test_scalar_output(self):
        critic = networks.build_critic()
        assert critic(rand_images(5)).shape == (5,)

    def test_finite_on_extremes(self):
        critic = networks.build_critic()
        assert torch.isfinite(critic(torch.zeros(2, 1, 28, 28))).all()
        assert torch.isfinite(critic(torch.ones(2, 1, 28, 28))).all()

    def test_input_gradient_finite(self):
        critic = networks.build_critic()
        x = rand_images(4).requires_grad_(True)
        critic(x).sum().backward()
        assert torch.isfinite(x.grad).all()

    def test_no_normalization_layers(self):
        kinds = {type(m) for m in networks.build_critic().modules()}
        assert not any(
            issubclass(k, (torch.nn.BatchNorm1d, torch.nn.BatchNorm2d, torch.nn.LayerNorm))
            for k in kinds
        )


class TestClassifier:
    def test_probability_output(self):
        clf = networks.build_classifier()
        probs = clf(rand_images(7))
        assert probs.shape == (7, 10)
        assert (probs >= 0).all()
        assert torch.allclose(probs.sum(dim=1), torch.ones(7), atol=1e-6)


class TestFingerprint:
    def test_changes_with_parameters(self):
        enc = networks.build_encoder(SPEC)
        before = networks.fingerprint(enc)
        with torch.no_grad():
            next(enc.parameters()).add_(1e-7)
        assert networks.fingerprint(enc) != before

    def test_stable_without_changes(self):
        enc = networks.build_encoder(SPEC)
        assert networks.fingerprint(enc) == networks.fingerprint(enc)

    def test_checkpoint_round_trip(self, tmp_path):
        enc = networks.build_encoder(SPEC)
        path = tmp_path / "enc.pt"
        networks.save_checkpoint(
            path, enc, arch={"dim": 3, "levels": 3}, config_hash="h", seed=0
        )
        enc2 = networks.build_encoder(SPEC)
        payload = networks.load_checkpoint(path, enc2)
        assert networks.fingerprint(enc2) == payload["fingerprint"]
        assert payload["arch"]["dim"] == 3


def test_all_networks_finite_on_random_draws():
    torch.manual_seed(0)
    enc = networks.build_encoder(SPEC)
    dec = networks.build_decoder(SPEC)
    critic = networks.build_critic()
    clf = networks.build_classifier()
    for m in (enc, dec, critic, clf):
        m.eval()
    x = rand_images(1000)
    with torch.no_grad():
        z = enc(x)
        assert torch.isfinite(z).all()
        assert torch.isfinite(dec(z)).all()
        assert torch.isfinite(critic(x)).all()
        assert torch.isfinite(clf(x)).all()
