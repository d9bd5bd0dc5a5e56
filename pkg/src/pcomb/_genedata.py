"""Embedded case-control mutation counts for the gene-level example.

Simulated genotype-phenotype study: 2,000 subjects (1,000 cases, 1,000
controls), 15 rare-variant SNPs across two genes.  Under no association a
SNP's case-mutation count follows a hypergeometric law given its total
mutation count.
"""

CASES = 1000
CONTROLS = 1000
POPULATION = CASES + CONTROLS

#: total mutation count per SNP (SNPs 1..15)
TOTAL_MUTATIONS = (19, 16, 16, 10, 13, 12, 10, 12, 11, 16, 19, 9, 14, 8, 7)
#: mutations observed in cases per SNP
CASE_MUTATIONS = (13, 11, 11, 7, 9, 8, 7, 8, 8, 11, 10, 3, 6, 5, 4)

#: gene membership, zero-based SNP indices
GENES = {
    "gene1": (0, 1, 2, 3, 4),
    "gene2": (5, 6, 7, 8, 9, 10, 11, 12, 13, 14),
}
