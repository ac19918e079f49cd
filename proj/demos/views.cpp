// Reads one recording, windows it and prints what the two contrastive views
// do to each window.
//
//   pcgssl-views RECORDING.wav [SEED]

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "pcgssl/augment/pipeline.hpp"
#include "pcgssl/dataio/wav.hpp"
#include "pcgssl/dsp/resample.hpp"
#include "pcgssl/dsp/window.hpp"

using namespace pcgssl;

namespace {

double rms(const std::vector<float>& x) {
  double s = 0;
  for (float v : x) s += double(v) * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

double correlation(const std::vector<float>& a, const std::vector<float>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  return aa > 0 && bb > 0 ? ab / std::sqrt(aa * bb) : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: pcgssl-views RECORDING.wav [SEED]\n";
    return 1;
  }
  try {
    const auto audio = decode_wav(std::filesystem::path(argv[1]));
    const auto signal = resample_to_2k(audio.samples, audio.sample_rate);
    const auto windows = trim_and_window(std::span<const double>(signal), {"demo", 0, Location::Other});
    std::cout << signal.size() / double(kTargetRate) << " s at 2 kHz -> " << windows.size() << " windows\n";

    const auto [view1, view2] = submitted_view_pipelines();
    std::cout << "view 1: " << view1.label() << "\nview 2: " << view2.label() << "\n\n";
    Rng rng(argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1);
    std::cout << std::fixed << std::setprecision(4) << "offset_s  rms      rms_v1   rms_v2   corr(v1,v2)\n";
    for (const auto& w : windows) {
      const auto a = apply_pipeline(w, view1, rng);
      const auto b = apply_pipeline(w, view2, rng);
      std::cout << std::setw(8) << w.offset_s << "  " << rms(w.samples) << "   " << rms(a.samples) << "   " << rms(b.samples)
                << "   " << correlation(a.samples, b.samples) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
