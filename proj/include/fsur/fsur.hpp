#pragma once

#include "fsur/audit.hpp"
#include "fsur/cache.hpp"
#include "fsur/common.hpp"
#include "fsur/dataset.hpp"
#include "fsur/evaluation.hpp"
#include "fsur/knn.hpp"
#include "fsur/mi.hpp"
#include "fsur/mi_types.hpp"
#include "fsur/relevance.hpp"
#include "fsur/selection.hpp"
