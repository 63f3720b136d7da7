#pragma once

#include "image.hpp"
#include "rng.hpp"

namespace ufv {

// Procedural face crop: layered soft-edged ellipses (hair, head, eyes, brows,
// nose, mouth) over a gradient background, randomized per (seed, index).
// Stands in for a face-crop corpus at desk scale.
Image synth_face(int size, uint64_t seed, uint64_t index);

// writes count PNGs named face_00000.png .. into dir
void make_corpus(const std::string& dir, int count, int size, uint64_t seed);

}  // namespace ufv
