"""Templates, expansion codes, channel resolution, and geometry."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binwidth import space, templates
from binwidth.errors import FormatError, InputError

ratio = st.sampled_from(space.RATIOS)


def code_for(template_name):
    n = templates.get_template(template_name).n_genes
    return st.tuples(*([ratio] * n))


class TestTemplates:
    def test_gene_counts(self):
        assert templates.vgg_small().n_genes == 7
        assert templates.resnet18().n_genes == 12
        assert templates.vgg_small_mini().n_genes == 4
        assert templates.resnet_mini().n_genes == 6

    def test_registry_lookup(self):
        assert templates.get_template("vgg_small").name == "vgg_small"
        with pytest.raises(InputError):
            templates.get_template("lenet")

    @pytest.mark.parametrize("name", sorted(templates.TEMPLATES))
    def test_first_and_last_weighted_layers_full_precision(self, name):
        t = templates.get_template(name)
        weighted = [l for l in t.layers if l.kind in ("conv", "fc")]
        assert not weighted[0].binarized
        assert not weighted[-1].binarized
        for layer in weighted[1:-1]:
            assert layer.binarized, layer.name

    def test_projection_shortcuts_are_binarized(self):
        t = templates.resnet18()
        projections = [b.proj_conv for b in t.blocks if b.proj_conv is not None]
        assert len(projections) == 3
        assert all(p.binarized for p in projections)

    def test_resnet18_has_twenty_convs_and_classifier(self):
        t = templates.resnet18()
        convs = sum(1 for l in t.layers if l.kind == "conv")
        convs += sum(1 for b in t.blocks if b.proj_conv is not None)
        fcs = sum(1 for l in t.layers if l.kind == "fc")
        assert convs == 20
        assert fcs == 1

    def test_rejects_misplaced_binarization(self):
        bad = [
            templates._conv("conv1", 3, 16, 3, binarized=True, gene=0),
            templates._fc("fc1", 16, 10, binarized=False),
        ]
        with pytest.raises(InputError):
            templates.NetworkTemplate("bad", tuple(bad), (3, 8, 8), 10, 1)

    def test_rejects_duplicate_gene_indices(self):
        bad = [
            templates._conv("conv1", 3, 16, 3, binarized=False, gene=0),
            templates._conv("conv2", 16, 16, 3, gene=0),
            templates._fc("fc1", 16, 10, binarized=False),
        ]
        with pytest.raises(InputError):
            templates.NetworkTemplate("bad", tuple(bad), (3, 8, 8), 10, 1)

    def test_rejects_base_width_not_divisible_by_four(self):
        bad = [
            templates._conv("conv1", 3, 18, 3, binarized=False, gene=0),
            templates._fc("fc1", 18, 10, binarized=False),
        ]
        with pytest.raises(InputError):
            templates.NetworkTemplate("bad", tuple(bad), (3, 8, 8), 10, 1)


class TestCodes:
    def test_uniform(self):
        assert space.uniform_code(1, 5) == (1.0,) * 5
        assert space.uniform_code(4, 2) == (4.0, 4.0)

    def test_uniform_rejects_foreign_ratio(self):
        with pytest.raises(InputError):
            space.uniform_code(1.5, 3)

    def test_validate_rejects_wrong_length(self):
        with pytest.raises(InputError):
            space.validate_code((1.0, 2.0), n_genes=3)

    def test_validate_rejects_foreign_ratio(self):
        with pytest.raises(InputError):
            space.validate_code((1.0, 0.3))

    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_random_codes_stay_in_candidate_set(self, n, seed):
        code = space.random_code(n, np.random.default_rng(seed))
        assert len(code) == n
        assert all(r in space.RATIOS for r in code)


class TestResolveChannels:
    def test_resnet18_all_ones(self):
        t = templates.resnet18()
        ch = space.resolve_channels(t, space.uniform_code(1, t.n_genes))
        assert ch["stem_conv"] == (3, 64)
        assert ch["s1b2_conv2"] == (64, 64)
        assert ch["s2b1_conv2"][1] == 128
        assert ch["s3b1_conv2"][1] == 256
        assert ch["s4b2_conv2"] == (512, 512)
        assert ch["fc"] == (512, 1000)

    def test_vgg_small_all_fours(self):
        t = templates.vgg_small()
        ch = space.resolve_channels(t, space.uniform_code(4, 7))
        widths = [ch[f"conv{i}"][1] for i in range(1, 7)]
        assert widths == [512, 512, 1024, 1024, 2048, 2048]

    def test_quarter_ratio_divides_exactly(self):
        t = templates.resnet18()
        code = [1.0] * t.n_genes
        code[0] = 0.25
        ch = space.resolve_channels(t, code)
        assert ch["stem_conv"] == (3, 16)

    def test_identity_block_output_tied_to_block_input(self):
        t = templates.resnet_mini()
        code = list(space.uniform_code(1, t.n_genes))
        code[0] = 2.0  # widen the stem; stage-1 identity block must follow
        code[1] = 3.0  # its mid gene stays free
        ch = space.resolve_channels(t, code)
        assert ch["s1b1_conv1"] == (32, 48)
        assert ch["s1b1_conv2"] == (48, 32)

    def test_projection_adopts_stage_gene(self):
        t = templates.resnet_mini()
        code = list(space.uniform_code(1, t.n_genes))
        code[3] = 2.0  # stage-2 output gene
        ch = space.resolve_channels(t, code)
        assert ch["s2b1_conv2"][1] == 64
        assert ch["s2b1_proj_conv"] == (ch["s2b1_conv1"][0], 64)

    def test_wrong_length_rejected(self):
        t = templates.vgg_small()
        with pytest.raises(InputError):
            space.resolve_channels(t, (1.0, 1.0))

    @pytest.mark.parametrize("name", sorted(templates.TEMPLATES))
    @given(data=st.data())
    @settings(max_examples=20, deadline=None)
    def test_channel_consistency_along_every_edge(self, name, data):
        t = templates.get_template(name)
        code = data.draw(code_for(name))
        ch = space.resolve_channels(t, code)
        geoms = space.layer_geometry(t, code)
        prev_out = t.input_shape[0]
        for g in geoms:
            if g.proj_of is not None:
                continue  # shortcut path checked via the add below
            assert g.in_ch == prev_out, g.spec.name
            prev_out = g.out_ch
        # Residual adds: both summands already forced equal by construction.
        for b in t.blocks:
            add_name = t.layers[b.add_layer].name
            assert ch[add_name][0] == ch[add_name][1]
            if b.proj_conv is not None:
                assert ch[b.proj_conv.name][1] == ch[t.layers[b.add_layer - 1].name][1]


class TestGeometry:
    def test_resnet18_spatial_walk(self):
        t = templates.resnet18()
        geoms = {g.spec.name: g for g in space.layer_geometry(t, space.uniform_code(1, t.n_genes))}
        assert (geoms["stem_conv"].h_out, geoms["stem_conv"].w_out) == (112, 112)
        assert (geoms["stem_pool"].h_out, geoms["stem_pool"].w_out) == (56, 56)
        assert (geoms["s2b1_conv1"].h_out, geoms["s2b1_conv1"].w_out) == (28, 28)
        assert (geoms["s4b2_conv2"].h_out, geoms["s4b2_conv2"].w_out) == (7, 7)
        assert (geoms["gap"].h_out, geoms["gap"].w_out) == (1, 1)
        assert geoms["fc"].in_features == 512

    def test_vgg_small_classifier_features(self):
        t = templates.vgg_small()
        geoms = {g.spec.name: g for g in space.layer_geometry(t, space.uniform_code(1, 7))}
        assert geoms["fc1"].in_features == 512 * 4 * 4
        assert geoms["fc2"].in_features == 1024

    def test_projection_geometry_matches_block_output(self):
        t = templates.resnet_mini()
        geoms = space.layer_geometry(t, space.uniform_code(2, t.n_genes))
        by_name = {g.spec.name: g for g in geoms}
        proj = by_name["s2b1_proj_conv"]
        main = by_name["s2b1_conv2"]
        assert (proj.h_out, proj.w_out) == (main.h_out, main.w_out)
        assert proj.out_ch == main.out_ch


class TestCodeFiles:
    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "code.json")
        code = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0)
        space.write_code_file(path, "resnet_mini", code)
        name, got = space.read_code_file(path)
        assert name == "resnet_mini"
        assert got == code

    def test_exact_decimal_serialization(self, tmp_path):
        path = str(tmp_path / "code.json")
        space.write_code_file(path, "vgg_small_mini", (0.25, 0.5, 1.0, 4.0))
        text = open(path).read()
        assert "0.25" in text and "0.5" in text
        assert " 1," in text or " 1\n" in text  # whole ratios stay integers
        assert "1.0" not in text

    def test_rejects_malformed_json(self, tmp_path):
        path = tmp_path / "code.json"
        path.write_text("not json")
        with pytest.raises(FormatError):
            space.read_code_file(str(path))

    def test_rejects_unexpected_keys(self, tmp_path):
        path = tmp_path / "code.json"
        path.write_text('{"template": "x", "ratios": [1], "extra": 1}')
        with pytest.raises(FormatError):
            space.read_code_file(str(path))

    def test_rejects_foreign_ratio(self, tmp_path):
        path = tmp_path / "code.json"
        path.write_text('{"template": "x", "ratios": [1.5]}')
        with pytest.raises(InputError):
            space.read_code_file(str(path))
