"""Main-theorem and Bergman verdicts for every built-in scene."""
from closedrange.classify import classify_bergman, classify_main
from closedrange.scenes import (arctan_lattice, disc_complement, integer_lattice_points, lattice_discs,
                                lattice_segments, plane)


def main():
    periodic = {"lattice_discs": lattice_discs(0.1, 1.0), "lattice_segments": lattice_segments(0.5, 1.0),
                "integer_lattice_points": integer_lattice_points(), "arctan_lattice": arctan_lattice()}
    for name, scene in periodic.items():
        r = classify_main(scene)
        print(f"{name:>24}: {r.verdict}")
    for name, scene in {"plane": plane(), "integer_lattice_points": integer_lattice_points(),
                        "disc_complement": disc_complement()}.items():
        print(f"{name:>24}: Bergman dimension {classify_bergman(scene).dimension}")


if __name__ == "__main__":
    main()
