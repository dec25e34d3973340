#pragma once

#include "vinebot/constants.hpp"
#include "vinebot/core_model.hpp"
#include "vinebot/error.hpp"
#include "vinebot/io.hpp"
#include "vinebot/mapping.hpp"
#include "vinebot/pipesim.hpp"
#include "vinebot/tip_mount.hpp"
