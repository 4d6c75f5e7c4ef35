"""
Generate the bundled synthetic class-set models
"""
import os

from anticyclo.autforms import save_class_set, synthetic_class_set
from anticyclo.reports import file_hash

MODEL_DIR = os.path.join("data", "models")

# name -> (n, p, masses, twisted cosets, stabilizers, refinements)
MODELS = {
    "toy-n1-p3": (
        1,
        3,
        [[1, 2], [2, 1]],
        [(0, 0), (1, 0)],
        [1, 1],
        [{"alpha": -1, "label": "ordinary"}, {"alpha": 3, "label": "slope-1"}],
    ),
    "one-class-p3": (
        1,
        3,
        [[3]],
        [],
        [1],
        [{"alpha": 3, "label": "slope-1"}],
    ),
    "toy-n2-p3": (
        2,
        3,
        [[122, 121], [121, 122]],
        [],
        [1, 1],
        [{"alpha": 1, "label": "ordinary"}],
    ),
}


def main():
    print("=" * 60)
    print("Synthetic class-set models")
    print("=" * 60)

    os.makedirs(MODEL_DIR, exist_ok=True)
    for name, (n, p, masses, twisted, stabilizers, refinements) in MODELS.items():
        model = synthetic_class_set(p, masses, twisted, stabilizers, refinements, name=name, n=n)
        path = os.path.join(MODEL_DIR, f"{name}.json")
        save_class_set(model, path)
        print(f"✓ {name}: n={n}, {len(model.classes)} classes, mass {model.mass()} -> {path} ({file_hash(path)})")


if __name__ == '__main__':
    main()
