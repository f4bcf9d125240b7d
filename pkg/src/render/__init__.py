# Map rendering package
from src.render.map_renderer import MapRenderer

__all__ = ['MapRenderer']
