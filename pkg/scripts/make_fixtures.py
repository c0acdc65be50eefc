"""Regenerate the small hand-built fixtures under tests/fixtures.

Both fixtures are written with plain csv/json so their expected statistics
follow from construction, not from the code under test.
"""

import csv
import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
HEADER = ["asn", "value_spec", "category", "subtype", "location", "description"]

SCOPES = ["ixp", "facility", "city", "country"]
ROLES = ["customer", "peer", "provider"]
ACTIONS = ["selective-advertisement", "local-preference", "prepend"]
ROLE_VALUE = {"customer": 100, "peer": 200, "provider": 300}


def mirror_dictionary():
    rows = []
    # 48 geolocation entries spread across four operators
    for i in range(48):
        rows.append([65001 + i % 4, 1000 + i, "geolocation", SCOPES[i % 4], f"LOC{i:02d}", "location tag"])
    # 21 relationship entries: seven ASes, three roles each
    for i in range(21):
        asn = 65010 + i // 3
        role = ROLES[i % 3]
        rows.append([asn, ROLE_VALUE[role], "relationship", role, "", "learned-from tag"])
    # 31 other: 6 blackhole + 25 action (two of them ranges)
    for i in range(6):
        rows.append([65020 + i, 666, "blackhole", "", "", "rtbh"])
    for i in range(25):
        spec = f"{5000 + 100 * i}-{5099 + 100 * i}" if i < 2 else str(5000 + 100 * i)
        rows.append([65030, spec, "action", ACTIONS[i % 3], "", "action"])
    assert len(rows) == 100
    with open(OUT / "dictionary_mirror.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)


TAGGERS = [65010, 65011, 65012]
PEER = (64496, "203.0.113.1")


def valley_mirror():
    with open(OUT / "valley_dictionary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for asn in TAGGERS:
            for role, value in ROLE_VALUE.items():
                w.writerow([asn, value, "relationship", role, "", ""])
    violating = {11, 47, 83}
    lines = []
    for i in range(100):
        # roles listed origin -> collector; each tag sits on the AS importing that edge
        roles = ["provider", "customer"] if i in violating else ["customer", "peer", "provider"]
        taggers = TAGGERS[:len(roles)]
        path = [PEER[0]] + taggers + [4200000000 + i]
        n = len(roles)
        comms = [f"{path[n - k]}:{ROLE_VALUE[r]}" for k, r in enumerate(roles)]
        lines.append({"ts": 1519862400 + i, "peer_asn": PEER[0], "peer_addr": PEER[1], "type": "A",
                      "prefix": f"10.{i}.0.0/16", "as_path": path, "communities": sorted(comms)})
    # five paths with no relationship tags; they must not enter the denominator
    for i in range(5):
        lines.append({"ts": 1519862500 + i, "peer_asn": PEER[0], "peer_addr": PEER[1], "type": "A",
                      "prefix": f"10.200.{i}.0/24", "as_path": [PEER[0], 4200001000 + i], "communities": []})
    with open(OUT / "valley_mirror.ndjson", "w") as fh:
        for rec in lines:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    mirror_dictionary()
    valley_mirror()
    print(f"fixtures written to {OUT}")
