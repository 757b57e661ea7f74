#pragma once

#include <filesystem>
#include <string>

#include "cgp/trainer.hpp"

namespace cgp {

inline constexpr const char* kModelSchema = "conserv-gp/v1";

// JSON text of a trained surrogate. Byte-identical for identical models.
std::string model_to_json(const TrainedSurrogate& model);
TrainedSurrogate model_from_json(const std::string& text);

void save_model(const TrainedSurrogate& model, const std::filesystem::path& path);
TrainedSurrogate load_model(const std::filesystem::path& path);

std::string loss_trace_csv(const TrainedSurrogate& model);

}  // namespace cgp
