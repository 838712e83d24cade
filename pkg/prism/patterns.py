"""
Centralised regular expressions for shared identifier formats.

Only patterns reused across modules live here: the series-key syntax is shared
by series files, ``aggregate --filter`` and ``--series-key`` selectors.
"""

import re

# A series key: "<priority>/<org>" where either side may be "*" (any), e.g.
# "HP/org-a", "Spot/*", "*/org-b". A bare priority ("HP") is also accepted.
SERIES_KEY_RE = re.compile(r"^(?P<priority>HP|Spot|\*)(?:/(?P<org>[A-Za-z0-9_.\-]{1,64}|\*))?$")

# An org tag as it appears in trace CSVs: alphanumerics plus ._- ; 1-64 chars.
ORG_RE = re.compile(r"^[A-Za-z0-9_.\-]{1,64}$")
