# vim: set filetype=python fileencoding=utf-8:
# -*- coding: utf-8 -*-

#============================================================================#
#                                                                            #
#  Licensed under the Apache License, Version 2.0 (the "License");           #
#  you may not use this file except in compliance with the License.          #
#  You may obtain a copy of the License at                                   #
#                                                                            #
#      http://www.apache.org/licenses/LICENSE-2.0                            #
#                                                                            #
#  Unless required by applicable law or agreed to in writing, software       #
#  distributed under the License is distributed on an "AS IS" BASIS,         #
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  #
#  See the License for the specific language governing permissions and       #
#  limitations under the License.                                            #
#                                                                            #
#============================================================================#


''' Dual-branch segmentation network and its weights archive. '''


from .archive import (
    load_archive,
    save_archive,
    validate_tensors,
)
from .configuration import (
    DecoderConfig,
    FcbConfig,
    HeadConfig,
    ModelConfig,
    SwinConfig,
    group_count,
    base_config,
    produce_preset,
    toy_config,
    validate_model_config,
)
from .fcb import (
    ConvolutionalBranch,
    ResidualBlock,
)
from .model import (
    FcbSwin,
    PredictionHead,
    build_model,
    count_parameters,
    initialize_parameters,
    load_weights,
    restore_weights,
    save_weights,
)
from .swin import (
    DecoderBlock,
    PatchEmbedding,
    PatchMerging,
    Scse,
    SwinBlock,
    SwinEncoder,
    TransformerBranch,
    WindowAttention,
    import_encoder_weights,
    produce_relative_position_index,
    produce_shift_mask,
    scaled_cosine_weights,
    window_partition,
    window_reverse,
)
