// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_GFTLATENT_HPP
#define GFTLATENT_GFTLATENT_HPP

#include "gftlatent/color.hpp"
#include "gftlatent/error.hpp"
#include "gftlatent/gft.hpp"
#include "gftlatent/latent.hpp"
#include "gftlatent/metrics.hpp"
#include "gftlatent/nn_kernels.hpp"
#include "gftlatent/pipeline.hpp"
#include "gftlatent/ply.hpp"
#include "gftlatent/point_cloud.hpp"
#include "gftlatent/spectral_graph.hpp"
#include "gftlatent/voxel_grid.hpp"

#endif  // GFTLATENT_GFTLATENT_HPP
