import re

from _fixtures import CA, PR
from tecollapse.collapse import Kind
from tecollapse.core import Modality
from tecollapse.otl import PlanePoint, bind_pairs, ols_fit
from tecollapse.svg import HEIGHT, LEFT, PLOT_H, PLOT_W, TOP, plane_svg, to_px

TAB = [PlanePoint("a", Modality.TABULAR, 0.7, 0.6), PlanePoint("b", Modality.TABULAR, 0.8, 0.75)]
EMB = [PlanePoint("a", Modality.EMBEDDED, 0.62022, 0.89395, Kind.STRICT_POSITIVE, Kind.STRICT_POSITIVE),
       PlanePoint("b", Modality.EMBEDDED, 0.75, 0.7)]


def _render():
    fits = {"tabular": ols_fit(TAB), "embedded": ols_fit(EMB)}
    return plane_svg(TAB + EMB, bind_pairs(TAB, EMB), fits, (CA, PR), title="t")


def test_pixel_mapping():
    assert to_px(0, 0) == (LEFT, TOP + PLOT_H)
    assert to_px(1, 1) == (LEFT + PLOT_W, TOP)


def test_svg_is_deterministic():
    assert _render() == _render()


def test_svg_contents():
    svg = _render()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count('class="point tabular"') == 2
    assert svg.count('class="point embedded"') == 2
    assert svg.count('class="binding"') == 2
    assert 'class="fit fit-embedded"' in svg and 'class="fit fit-tabular"' in svg
    cx = [float(v) for v in re.findall(r'class="guide-x" x1="([0-9.]+)"', svg)]
    assert abs(cx[0] - to_px(float(CA.tr), 0)[0]) < 1e-9
    assert abs(cx[1] - to_px(float(CA.fr), 0)[0]) < 1e-9
    assert f'height="{HEIGHT}"' in svg
