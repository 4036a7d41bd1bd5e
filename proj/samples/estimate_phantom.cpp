// Copyright 2026 The bodymetrics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Renders a synthetic subject, runs the estimator on the frame and compares
// the result with the analytic ground truth.

#include <cstdio>

#include "bodymetrics/phantom.hpp"
#include "bodymetrics/pipeline.hpp"

int main() {
  using namespace bodymetrics;
  const PhantomScene subject = make_humanoid(1.75, 1.0, HumanoidPose::kArmsDown);
  const CameraIntrinsics intr = CameraIntrinsics::default_848x480();
  const DepthFrame frame = render_depth(subject, intr, default_camera(subject, 2.0), 7);

  PipelineLog log;
  const BodyEstimate est = run_pipeline(frame, PipelineConfig{}, &log);
  for (const StageRecord& s : log) {
    std::printf("%-12s %7zu -> %7zu points  %8.2f ms\n", s.name.c_str(), s.points_in,
                s.points_out, s.duration_ms);
  }
  std::printf("height %.3f m (truth %.3f)\n", est.height, subject.ground_truth.height);
  std::printf("volume %.4f m^3 (truth %.4f)\n", est.volume, subject.ground_truth.volume);
  std::printf("weight %.1f kg (truth %.1f)\n", est.weight, 1000.0 * subject.ground_truth.volume);
  return 0;
}
