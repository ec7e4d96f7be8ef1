#pragma once

#include "reasonpath/error.hpp"
#include "reasonpath/corpus.hpp"
#include "reasonpath/textsim.hpp"
#include "reasonpath/trajcluster.hpp"
#include "reasonpath/segmenter.hpp"
#include "reasonpath/embedspace.hpp"
#include "reasonpath/embed_client.hpp"
#include "reasonpath/rgraph.hpp"
#include "reasonpath/gmetrics.hpp"
#include "reasonpath/pipeline.hpp"
