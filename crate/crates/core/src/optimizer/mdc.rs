use crate::error::{Error, Result};
use crate::transcript::{VotingTranscript, NO, YES};
use crate::weight::Weight;

/// Minimum decisive coalition: the fewest winner-side voters whose switch
/// to the losing side changes the winner.
///
/// Switching the heaviest voters first is optimal for cardinality. A tied
/// proposal has MDC 0. Winner ties go to yes, so a yes win flips once yes
/// falls strictly below no, and a no win flips once yes reaches no.
pub fn mdc(t: &VotingTranscript) -> Result<usize> {
    if !t.is_binary() {
        return Err(Error::NotBinary {
            num_choices: t.num_choices(),
        });
    }
    let totals = t.raw_totals();
    if totals[YES] == totals[NO] {
        return Ok(0);
    }
    let winner = t.winner();
    let mut side: Vec<Weight> = t
        .weights()
        .iter()
        .zip(t.choices())
        .filter(|&(_, &c)| c == winner)
        .map(|(w, _)| *w)
        .collect();
    side.sort_unstable_by(|a, b| b.cmp(a));
    let (mut yes, mut no) = (totals[YES].units(), totals[NO].units());
    for (k, w) in side.iter().enumerate() {
        let w = w.units();
        if winner == YES {
            yes -= w;
            no += w;
            if yes < no {
                return Ok(k + 1);
            }
        } else {
            no -= w;
            yes += w;
            if yes >= no {
                return Ok(k + 1);
            }
        }
    }
    // moving the whole winning side always flips a non-tied proposal
    Ok(side.len())
}
