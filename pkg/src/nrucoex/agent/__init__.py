from .dual import DualState, dual_update
from .qnet import QNetwork, load_checkpoint, q_forward, save_checkpoint, train_step
from .replay import ReplayBuffer, Transition
from .train import (DESK_SCHEDULE, TrainResult, TrainSchedule, Trajectory, execute,
                    execute_qasal, select_action, train_primal_dual, train_qasal)
