#pragma once
#include <gknock/types.hpp>
#include <gknock/grouped_model.hpp>
#include <gknock/knockoff_construction.hpp>
#include <gknock/group_lasso.hpp>
#include <gknock/filter.hpp>
#include <gknock/multitask.hpp>
#include <gknock/simulation.hpp>
