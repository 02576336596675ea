#pragma once

#include "csifp/channel/codebook.hpp"
#include "csifp/channel/csi.hpp"
#include "csifp/channel/ray_tracer.hpp"
#include "csifp/channel/scene.hpp"
#include "csifp/dataset/dataset_io.hpp"
#include "csifp/dataset/fingerprint_dataset.hpp"
#include "csifp/dataset/tensor_packing.hpp"
#include "csifp/nn/checkpoint.hpp"
#include "csifp/nn/network.hpp"
#include "csifp/nn/trainer.hpp"
#include "csifp/pipeline/commands.hpp"
#include "csifp/positioning/decoder.hpp"
#include "csifp/positioning/evaluation.hpp"
