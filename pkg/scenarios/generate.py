"""Regenerates the checked-in benchmark scenario files.

Run from the repo root:  python3 scenarios/generate.py
"""
import json
from pathlib import Path

STABLE_KEYWORDS = [
    ["solar", "panel", "inverter", "rooftop", "kilowatt"],
    ["battery", "storage", "lithium", "charging", "cell"],
    ["football", "league", "season", "playoff", "touchdown"],
    ["recipe", "kitchen", "baking", "flour", "oven"],
    ["housing", "mortgage", "rates", "property", "listing"],
    ["cinema", "premiere", "director", "screenplay", "casting"],
    ["orchestra", "symphony", "concert", "violin", "conductor"],
    ["railway", "commuter", "station", "timetable", "platform"],
    ["fisheries", "harbor", "quota", "trawler", "catch"],
    ["museum", "exhibit", "curator", "gallery", "collection"],
    ["vineyard", "harvest", "winery", "barrel", "tasting"],
    ["satellite", "launch", "payload", "orbit", "telemetry"],
]

EMERGENT = {
    "key": "emergent",
    "schedule": [0, 0, 0, 0, 2, 4, 8, 16, 32, 64] + [64] * 10,
    "spread": 0.0,
    "keywords": ["outbreak", "virus", "respiratory", "pneumonia", "cases", "hospital"],
    # loose intent: the growth phase should read as weak, the plateau as strong
    "intended": [None] * 6 + ["weak"] * 3 + [None] * 3 + ["strong"] * 8,
}


def stable(i, rate, spread, slices, strong_from=None):
    intended = [None] * slices
    if strong_from is not None:
        intended = [None] * strong_from + ["strong"] * (slices - strong_from)
    return {
        "key": f"stable-{i:02d}",
        "schedule": [rate] * slices,
        "spread": spread,
        "keywords": STABLE_KEYWORDS[i],
        "intended": intended,
    }


def scenario_a(noise_per_slice, spread, with_zeroshot):
    slices = 20
    rates = [6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28]
    planted = [
        stable(i, r, spread, slices, strong_from=2 if r == max(rates) else None)
        for i, r in enumerate(rates)
    ]
    planted.append(dict(EMERGENT))
    out = {
        "seed": 11,
        "dim": 32,
        "slices": slices,
        "granularity_days": 1,
        "start": "2024-01-01",
        "background_noise_per_slice": noise_per_slice,
        "reduced_dim": 12,
        "planted": planted,
    }
    if with_zeroshot:
        out["zeroshot"] = [
            {
                "name": "emerging-monitor",
                "description": "reports about a newly emerging disease outbreak",
                "beta": 0.45,
                "center_of": "emergent",
            }
        ]
    return out


def scenario_b():
    slices = 14
    rates = [10, 12, 14, 16, 18, 20, 22, 24]
    planted = [stable(i, r, 0.01, slices) for i, r in enumerate(rates)]
    planted.append(
        {
            "key": "flash",
            "schedule": [0, 0, 30, 40] + [0] * 10,
            "spread": 0.0,
            "keywords": ["verdict", "trial", "courtroom", "testimony", "jury"],
            "intended": [None] * 8 + ["noise"] * 6,
        }
    )
    return {
        "seed": 13,
        "dim": 32,
        "slices": slices,
        "granularity_days": 1,
        "start": "2024-02-01",
        "background_noise_per_slice": 2,
        "reduced_dim": 8,
        "planted": planted,
    }


def scenario_c():
    return {
        "seed": 17,
        "dim": 16,
        "slices": 6,
        "granularity_days": 1,
        "start": "2024-03-01",
        "background_noise_per_slice": 0,
        "planted": [
            {
                "key": "anchor-topic",
                "schedule": [10] * 6,
                "spread": 0.0,
                "keywords": ["election", "ballot", "poll", "candidate"],
                "intended": [None] * 6,
            },
            {
                "key": "adjacent",
                "schedule": [0, 0, 0, 8, 8, 8],
                "spread": 0.0,
                "keywords": ["election", "recount", "ballot", "audit"],
                "intended": [None] * 6,
                "cosine_to": {"ref": "anchor-topic", "value": 0.72},
            },
        ],
    }


def main():
    here = Path(__file__).parent
    files = {
        "scenario_a.json": scenario_a(4, 0.02, with_zeroshot=True),
        "scenario_a_clean.json": scenario_a(0, 0.0, with_zeroshot=False),
        "scenario_b_flash.json": scenario_b(),
        "scenario_c_boundary.json": scenario_c(),
    }
    for name, obj in files.items():
        (here / name).write_text(json.dumps(obj, indent=2) + "\n")
        docs = sum(sum(t["schedule"]) for t in obj["planted"])
        docs += obj["background_noise_per_slice"] * obj["slices"]
        print(f"{name}: {docs} documents")


if __name__ == "__main__":
    main()
