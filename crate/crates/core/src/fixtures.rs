//! Shared test fixtures.

/// "Their son was only ten months old ." with a UD-style analysis.
pub(crate) const FIG1: &str = "# sent_id = fig1
# text = Their son was only ten months old.
1\tTheir\ttheir\tPRON\tPRP$\tNumber=Plur|Person=3|Poss=Yes|PronType=Prs\t2\tnmod:poss\t2:nmod:poss\t_
2\tson\tson\tNOUN\tNN\tNumber=Sing\t7\tnsubj\t7:nsubj\t_
3\twas\tbe\tAUX\tVBD\tMood=Ind|Tense=Past|VerbForm=Fin\t7\tcop\t7:cop\t_
4\tonly\tonly\tADV\tRB\t_\t6\tadvmod\t6:advmod\t_
5\tten\tten\tNUM\tCD\tNumType=Card\t6\tnummod\t6:nummod\t_
6\tmonths\tmonth\tNOUN\tNNS\tNumber=Plur\t7\tobl:npmod\t7:obl:npmod\t_
7\told\told\tADJ\tJJ\tDegree=Pos\t0\troot\t0:root\tSpaceAfter=No
8\t.\t.\tPUNCT\t.\t_\t7\tpunct\t7:punct\t_

";
