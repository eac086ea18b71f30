/*
 * Copyright 2026 The AdaCoF-CPP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "adacof/checkpoint.hpp"
#include "adacof/datagen.hpp"
#include "adacof/losses.hpp"
#include "adacof/metrics.hpp"
#include "adacof/synthnet.hpp"

namespace adacof {

struct TrainConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path val_dir;  // optional
  ModelConfig model;
  double lr = 1e-3;
  std::size_t batch = 4;
  int epochs = 30;           // phase 1, on the distortion loss
  int halving_period = 20;
  std::uint64_t seed = 0;
  LossConfig loss;           // loss.mode == perception enables phase 2
  int finetune_epochs = 10;  // phase 2 length
  std::size_t crop = 0;      // augmentation crop side, 0 = full frame
  bool augment = true;

  void validate() const;
};

// train.json. Required keys: dataset_dir, F, d, depth, widths, lr, batch,
// epochs, seed, mode ("distortion" or "perception"), lambda_1, lambda_vgg,
// lambda_adv. Optional: val_dir, warp_mode, use_occlusion, head_width,
// finetune_epochs, crop, augment, halving_period, binary_entropy. Unknown
// keys are rejected. Relative directories resolve against `base_dir`.
TrainConfig parse_train_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochRecord {
  int epoch = 0;
  std::string phase;  // "distortion" or "adversarial"
  double loss = 0.0;  // mean generator loss over the epoch
  double val_psnr = 0.0;  // NaN without a validation set
  double val_ssim = 0.0;
};

std::string epoch_csv_header();  // "epoch,phase,loss,val_psnr,val_ssim"
std::string to_csv(const EpochRecord& record);

// Mean training loss over each quarter of an epoch's batches.
struct QuarterRecord {
  int epoch = 0;
  int quarter = 0;
  double loss = 0.0;
};

struct TrainOptions {
  // When set: metrics.csv, quarters.csv, epoch_NNN.ackp per epoch and
  // final.ackp are written here.
  std::filesystem::path out_dir;
  std::function<void(const std::string&)> log;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> epochs;
  std::vector<QuarterRecord> quarters;
};

// Phase 1 minimizes the distortion loss; in perception mode phase 2 then
// alternates one discriminator step and one generator step per batch.
// Throws NumericError when the loss turns non-finite.
TrainResult train(const TrainConfig& config, const std::vector<Triplet>& train_set,
                  const std::vector<Triplet>& val_set, const TrainOptions& options = {});

// Per-image PSNR above this is counted as this in set averages, so a single
// identical pair cannot make the mean infinite.
inline constexpr double kPsnrCap = 100.0;

struct SetMetrics {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double ie = 0.0;
};

// Synthesizes the middle frame of (first, last).
Frame interpolate(const ParameterSet<float>& params, const ModelConfig& config, const Frame& first,
                  const Frame& last, ModelOutput<float>* params_out = nullptr);

// (first + last) / 2, the no-motion baseline.
Frame frame_average(const Frame& first, const Frame& last);

SetMetrics evaluate_model(const ParameterSet<float>& params, const ModelConfig& config,
                          const std::vector<Triplet>& set, std::vector<MetricRow>* rows = nullptr);
SetMetrics evaluate_frame_average(const std::vector<Triplet>& set,
                                  std::vector<MetricRow>* rows = nullptr);

}  // namespace adacof
