"""
Site selection package: clearance-maximizing landing site proposal.
"""

from src.site_selection.selector import (DistanceMap, LandingSite, distance_transform, format_site,
                                         propose_site, read_sites, safe_mask, select_site, write_sites)

__all__ = [
    'DistanceMap', 'LandingSite', 'distance_transform', 'format_site', 'propose_site',
    'read_sites', 'safe_mask', 'select_site', 'write_sites',
]
