#pragma once

#include <array>
#include <string>
#include <vector>

#include "fasttab/rng.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

// One dataset entry: image, grid ground truth, and text-box pixel rects
// (x0,y0,x1,y1 with exclusive right/bottom edges).
struct Sample {
    std::string id;
    TensorPtr image;  // [3,H,W] in [0,1]
    GridSpec grid;
    SpanGrid spans;
    std::vector<std::array<int, 4>> text_boxes;

    bool has_curved = false;  // set by rotate_sample
    CurvedGrid curved;
};

enum class AnonymMethod { Black, Median, GaussianBlur, Pixelation, Mean, Noise };

AnonymMethod anonym_from_string(const std::string& s);
std::string anonym_to_string(AnonymMethod m);

struct SynthSpec {
    GridSpec grid;
    SpanGrid spans;
    int height = 96, width = 96;
    bool ruled = true;
};

// Random layout within the given caps: jittered boundaries, occasional
// merged regions (always a valid tiling), 0-2 header rows.
SynthSpec random_synth_spec(Rng& rng, int r_cap, int c_cap, int rs_cap, int cs_cap,
                            int height = 96, int width = 96);

// White canvas, optional ruled separator lines at the ground-truth
// boundaries, shaded header band, 1-3 dark word blocks per logical cell.
Sample render_synthetic(const SynthSpec& spec, Rng& rng, const std::string& id);

// Applies one method inside every box, in list order; pixels outside the
// union of boxes are bit-identical to the input.
TensorPtr anonymise(const TensorPtr& img, const std::vector<std::array<int, 4>>& boxes,
                    AnonymMethod method, Rng& rng);

// Rotate about the image center by theta ~ U(-alpha, alpha) with bilinear
// resampling onto white; straight boundaries become K-point polylines
// renormalized to the rotated table's bounding box. alpha=0 is the identity
// (polylines degenerate to the straight boundaries).
Sample rotate_sample(const Sample& s, double alpha_deg, Rng& rng, int k_points = 65);

// Deterministic-angle variant used by rotate_sample (and tests).
Sample rotate_sample_theta(const Sample& s, double theta_deg, int k_points = 65);

// Binary PPM (P6), 8-bit.
void write_ppm(const std::string& path, const TensorPtr& img);
TensorPtr read_ppm(const std::string& path);

// JSON Lines dataset: <dir>/data.jsonl + <dir>/images/<id>.ppm.
void write_dataset(const std::string& dir, const std::vector<Sample>& samples);
std::vector<Sample> load_dataset(const std::string& jsonl_path);

}  // namespace fasttab
