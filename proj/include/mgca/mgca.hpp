#pragma once

#include "mgca/alignment/align.hpp"
#include "mgca/clues/collect.hpp"
#include "mgca/clues/fixture_providers.hpp"
#include "mgca/clues/http_providers.hpp"
#include "mgca/data/ingest.hpp"
#include "mgca/data/split.hpp"
#include "mgca/encoding/bundle.hpp"
#include "mgca/encoding/fixture_encoders.hpp"
#include "mgca/encoding/http_encoders.hpp"
#include "mgca/eval/heatmap.hpp"
#include "mgca/eval/metrics.hpp"
#include "mgca/model/checkpoint.hpp"
#include "mgca/model/mgca_model.hpp"
#include "mgca/train/config.hpp"
#include "mgca/train/pipeline.hpp"
#include "mgca/train/trainer.hpp"
