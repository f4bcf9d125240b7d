"""
Map renderer for DEMs, safety maps, probability and uncertainty maps.
Writes binary PGM (grayscale) or PPM (color) through Pillow.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw

from src.hazard.maps import Label
from src.site_selection.selector import LandingSite
from src.terrain.dem_io import PathLike, read_grid
from src.uncertainty.entropy import LN2

# Safe blue, unsafe yellow, invalid gray
SAFETY_COLORS = {
    Label.SAFE: (0, 0, 255),
    Label.UNSAFE: (255, 255, 0),
    Label.INVALID: (96, 96, 96),
}
SITE_COLOR = (255, 0, 0)


def _to_gray(values: np.ndarray, low: float, high: float) -> np.ndarray:
    if not high > low:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = (np.asarray(values, dtype=np.float64) - low) / (high - low)
    return np.rint(np.clip(scaled, 0.0, 1.0) * 255.0).astype(np.uint8)


class MapRenderer:
    """
    Render grids to images
    """

    def __init__(self, scale: int = 1):
        """
        Initialize renderer

        Args:
            scale: Integer upscaling factor (nearest neighbour) for viewing
        """
        self.logger = logging.getLogger(__name__)
        self.scale = max(1, int(scale))

    def render_dem(self, heights: np.ndarray) -> Image.Image:
        """Grayscale, lowest height black and highest white"""
        heights = np.asarray(heights, dtype=np.float64)
        return self._finish(Image.fromarray(_to_gray(heights, heights.min(), heights.max()), 'L'))

    def render_probability(self, p_safe: np.ndarray) -> Image.Image:
        return self._finish(Image.fromarray(_to_gray(p_safe, 0.0, 1.0), 'L'))

    def render_uncertainty(self, entropy: np.ndarray) -> Image.Image:
        """Grayscale scaled to [0, ln 2]"""
        return self._finish(Image.fromarray(_to_gray(entropy, 0.0, LN2), 'L'))

    def render_safety(self, labels: np.ndarray) -> Image.Image:
        labels = np.asarray(labels)
        rgb = np.zeros(labels.shape + (3,), dtype=np.uint8)
        for label, color in SAFETY_COLORS.items():
            rgb[labels == label] = color
        return self._finish(Image.fromarray(rgb, 'RGB'))

    def draw_site(self, image: Image.Image, site: LandingSite) -> Image.Image:
        """Overlay a cross marker at the site (converts to RGB)"""
        image = image.convert('RGB')
        draw = ImageDraw.Draw(image)
        cx = site.col * self.scale + self.scale // 2
        cy = site.row * self.scale + self.scale // 2
        arm = max(2, 2 * self.scale)
        draw.line([(cx - arm, cy), (cx + arm, cy)], fill=SITE_COLOR)
        draw.line([(cx, cy - arm), (cx, cy + arm)], fill=SITE_COLOR)
        return image

    def render_file(self, map_path: PathLike, out_path: PathLike,
                    site: Optional[LandingSite] = None) -> Path:
        """
        Render a grid file to an image file

        Args:
            map_path: .dem / .sfm / probability / entropy grid
            out_path: Target path; extension is replaced by .pgm or .ppm
            site: Optional landing site marker

        Returns:
            Path actually written
        """
        values, kind, _ = read_grid(map_path)
        if kind == 'dem':
            image = self.render_dem(values)
        elif kind == 'safety':
            image = self.render_safety(values)
        elif kind == 'entropy':
            image = self.render_uncertainty(values)
        elif kind == 'prob':
            image = self.render_probability(values)
        else:
            raise ValueError(f"Unknown map type: {kind}")
        if site is not None:
            image = self.draw_site(image, site)

        suffix = '.pgm' if image.mode == 'L' else '.ppm'
        out_path = Path(out_path).with_suffix(suffix)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        image.save(out_path, format='PPM')
        self.logger.info(f"Rendered {kind} map {map_path} -> {out_path}")
        return out_path

    def _finish(self, image: Image.Image) -> Image.Image:
        if self.scale == 1:
            return image
        return image.resize((image.width * self.scale, image.height * self.scale), Image.NEAREST)
