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


''' Pytest configuration and shared fixtures. '''


from pathlib import Path

import pytest

from .fixtures import produce_kvasir_dataset


@pytest.fixture
def kvasir_dataset( tmp_path: Path ) -> Path:
    ''' Small Kvasir-style dataset on disk. '''
    return produce_kvasir_dataset( tmp_path / 'kvasir' )


@pytest.fixture
def deterministic_environment( monkeypatch ):
    ''' Requests deterministic kernels for duration of test. '''
    import torch
    monkeypatch.setenv( 'FCB_DETERMINISTIC', '1' )
    threads = torch.get_num_threads( )
    yield
    torch.use_deterministic_algorithms( False )
    torch.set_num_threads( threads )


def pytest_sessionfinish( session, exitstatus ):
    if exitstatus == 5:  # pytest exit code for "no tests collected"
        session.exitstatus = 0
