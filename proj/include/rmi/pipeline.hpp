#pragma once
#include <string>

#include "rmi/config.hpp"

namespace rmi::pipeline {

// Batch commands. Each is idempotent for a fixed config+seed and stamps its
// artifacts with the config hash. Throws rmi::Error; the CLI maps codes to
// exit status.
void run_generate(const PipelineConfig& c);
void run_project(const PipelineConfig& c);
void run_degrade(const PipelineConfig& c);
void run_extract(const PipelineConfig& c);
void run_fit_noise(const PipelineConfig& c);
void run_train(const PipelineConfig& c);
void run_evaluate(const PipelineConfig& c);
void run_sweep(const PipelineConfig& c);
void run_growth(const PipelineConfig& c);
void run_plot(const PipelineConfig& c);

// dispatch by command name; returns process exit code
int run_command(const std::string& command, const PipelineConfig& c);

} // namespace rmi::pipeline
