#pragma once

#include <span>
#include <string>

#include "photonlab/analysis.hpp"

namespace photonlab::plots {

// Data with the fitted model overlaid, as SVG documents.
std::string spectrum(const Spectrum& s, const FitResult& fit);
std::string envelope(const Envelope& env, const FitResult& fit);
std::string interferogram(const Interferogram& ig);
std::string g2(const CorrelationHistogram& h, const FitResult& fit);
std::string decay(std::span<const DecayBin> bins, const FitResult& fit, double window_start_ps);
std::string polarization(std::span<const PolarizationSample> samples, PolarizationMode mode,
                         const FitResult& fit, const std::string& title);
std::string image_stack(std::span<const DefocusedImage> stack, const std::string& title);

}  // namespace photonlab::plots
